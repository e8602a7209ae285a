use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::harness::spec::{ExperimentSpec, Prior};
use crate::numerics::{read_matrix, read_vector, save_matrix, save_vector};
use crate::{LeastSquares, Matrix, Vector};

/// A generated sparse-regression problem with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub x: Matrix,
    pub y: Vector,
    pub theta_star: Vector,
    pub seed: u64,
    pub prior: Prior,
}

impl Instance {
    pub fn d(&self) -> usize {
        self.x.cols()
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn k_star(&self) -> usize {
        self.theta_star.nnz()
    }

    pub fn objective(&self) -> Result<LeastSquares> {
        LeastSquares::new(self.x.clone(), self.y.clone())
    }

    /// Writes `X.mat`, `y.vec`, `theta_star.vec` and `meta` into `dir`.
    pub fn write_bundle(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        save_matrix(dir.join("X.mat"), &self.x)?;
        save_vector(dir.join("y.vec"), &self.y)?;
        save_vector(dir.join("theta_star.vec"), &self.theta_star)?;
        let meta = format!(
            "d={}\nn={}\nkstar={}\nseed={}\nprior={}\n",
            self.d(),
            self.n(),
            self.k_star(),
            self.seed,
            self.prior.name()
        );
        std::fs::write(dir.join("meta"), meta)?;
        Ok(())
    }

    pub fn read_bundle(dir: &Path) -> Result<Self> {
        let x: Matrix = read_matrix(dir.join("X.mat"))?;
        let y: Vector = read_vector(dir.join("y.vec"))?;
        let theta_star: Vector = read_vector(dir.join("theta_star.vec"))?;
        let meta_text = std::fs::read_to_string(dir.join("meta"))?;
        let meta: BTreeMap<&str, &str> = meta_text
            .lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.trim(), v.trim()))
            .collect();
        let get = |k: &str| meta.get(k).copied().ok_or_else(|| Error::Parse(format!("meta is missing {k}")));
        let parse_usize = |k: &str| -> Result<usize> {
            get(k)?.parse().map_err(|e| Error::Parse(format!("meta {k}: {e}")))
        };
        let inst = Self {
            seed: get("seed")?.parse().map_err(|e| Error::Parse(format!("meta seed: {e}")))?,
            prior: get("prior")?.parse()?,
            x,
            y,
            theta_star,
        };
        if parse_usize("d")? != inst.d() || parse_usize("n")? != inst.n() || inst.y.dim() != inst.n() {
            return Err(Error::Parse("bundle dimensions disagree with meta".into()));
        }
        if inst.theta_star.dim() != inst.d() || parse_usize("kstar")? != inst.k_star() {
            return Err(Error::Parse("theta_star disagrees with meta".into()));
        }
        Ok(inst)
    }
}

/// Gaussian sensing matrix with `N(0, 1/n)` entries and labels `y = Xθ*`
/// (plus optional noise).
fn sense<R: Rng + ?Sized>(theta_star: Vector, n: usize, noise: f64, rng: &mut R) -> Result<(Matrix, Vector)> {
    let d = theta_star.dim();
    let dist = Normal::new(0.0, (1.0 / n as f64).sqrt()).expect("positive variance");
    let x = Matrix::from_fn(n, d, |_, _| rng.sample(dist));
    let mut y = x.matvec(&theta_star)?;
    if noise > 0.0 {
        for i in 0..n {
            y[i] += noise * rng.sample::<f64, _>(StandardNormal);
        }
    }
    Ok((x, y))
}

/// Draws a `k*`-sparse standard-normal signal and measurements of it.
pub fn gen_instance<R: Rng + ?Sized>(spec: &ExperimentSpec, seed: u64, rng: &mut R) -> Result<Instance> {
    if spec.k_star > spec.d {
        return Err(Error::KOutOfRange { k: spec.k_star, d: spec.d });
    }
    let dense: Vec<f64> = (0..spec.d).map(|_| rng.sample(StandardNormal)).collect();
    let mut theta_star = Vector::zeros(spec.d);
    for i in sample(rng, spec.d, spec.k_star).into_iter() {
        theta_star[i] = dense[i];
    }
    let (x, y) = sense(theta_star.clone(), spec.n, spec.noise, rng)?;
    Ok(Instance { x, y, theta_star, seed, prior: Prior::Gaussian })
}

/// 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    /// Row-major intensities.
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn load(path: &Path) -> Result<Self> {
        let img = image::ImageReader::open(path)
            .map_err(|e| Error::ImageLoad(format!("{}: {e}", path.display())))?
            .with_guessed_format()
            .map_err(|e| Error::ImageLoad(format!("{}: {e}", path.display())))?
            .decode()
            .map_err(|e| Error::ImageLoad(format!("{}: {e}", path.display())))?
            .into_luma8();
        Ok(Self { width: img.width() as usize, height: img.height() as usize, pixels: img.into_raw() })
    }

    pub fn save_pgm(&self, path: &Path) -> Result<()> {
        let buf = image::GrayImage::from_raw(self.width as u32, self.height as u32, self.pixels.clone())
            .ok_or_else(|| Error::ImageLoad("pixel buffer does not match dimensions".into()))?;
        buf.save_with_format(path, image::ImageFormat::Pnm)
            .map_err(|e| Error::ImageLoad(format!("{}: {e}", path.display())))
    }

    pub fn nonzero(&self) -> usize {
        self.pixels.iter().filter(|&&p| p != 0).count()
    }

    pub fn to_signal(&self) -> Vector {
        Vector::from(self.pixels.iter().map(|&p| p as f64).collect::<Vec<_>>())
    }
}

/// Uses the image as `θ*` (raw 0–255 scale) and draws `n` Gaussian
/// measurements of it.
pub fn gen_image_instance<R: Rng + ?Sized>(
    img: &GrayImage,
    n: usize,
    noise: f64,
    seed: u64,
    rng: &mut R,
) -> Result<Instance> {
    if img.nonzero() == 0 {
        return Err(Error::EmptySignal);
    }
    let (x, y) = sense(img.to_signal(), n, noise, rng)?;
    Ok(Instance { x, y, theta_star: img.to_signal(), seed, prior: Prior::Image })
}

/// Splitmix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of stream `index` under `seed`; streams depend only on their own
/// index, so adding runs never perturbs earlier ones.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}
