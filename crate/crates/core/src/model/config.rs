use serde::{Deserialize, Serialize};

use crate::attention::{WindowKind, WindowSpec};
use crate::error::{Error, Result};
use crate::hash;

/// Window shapes (rows × cols) for the three window sub-blocks of a stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSet {
    pub square: [usize; 2],
    pub east_west: [usize; 2],
    pub north_south: [usize; 2],
}

impl WindowSet {
    pub fn specs(&self) -> Result<[WindowSpec; 3]> {
        Ok([
            WindowSpec::new(WindowKind::Square, self.square[0], self.square[1])?,
            WindowSpec::new(WindowKind::EastWest, self.east_west[0], self.east_west[1])?,
            WindowSpec::new(WindowKind::NorthSouth, self.north_south[0], self.north_south[1])?,
        ])
    }
}

/// Architecture and coding hyperparameters of the dual-VAE model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    /// Patch (rows, cols) of the latent patch embedding.
    pub patch: [usize; 2],
    pub token_dim: usize,
    /// Channels of the latent y.
    pub latent_channels: usize,
    /// Patch over the latent grid for the hyper-prior encoder.
    pub hyper_patch: [usize; 2],
    pub hyper_token_dim: usize,
    /// Channels of the hyper-latent z.
    pub hyper_latent_channels: usize,
    pub windows: WindowSet,
    pub hyper_windows: WindowSet,
    /// ACT stages in the latent encoder and in the reconstruction decoder.
    pub depth: usize,
    /// ACT stages in the hyper-prior encoder and decoder.
    pub hyper_depth: usize,
    pub heads: usize,
    pub hyper_heads: usize,
    pub mlp_ratio: usize,
    /// Weight of the latent rate in the rate-distortion loss.
    pub lambda: f64,
    pub seed: u64,
    pub symbol_min: i32,
    pub symbol_max: i32,
}

impl ModelConfig {
    /// 8×32×64 grid, 4×4 patches, 8×16 token grid with D = 64.
    pub fn desk() -> Self {
        Self {
            channels: 8,
            height: 32,
            width: 64,
            patch: [4, 4],
            token_dim: 64,
            latent_channels: 8,
            hyper_patch: [4, 4],
            hyper_token_dim: 64,
            hyper_latent_channels: 8,
            windows: WindowSet {
                square: [4, 4],
                east_west: [2, 8],
                north_south: [8, 2],
            },
            hyper_windows: WindowSet {
                square: [2, 2],
                east_west: [1, 4],
                north_south: [2, 1],
            },
            depth: 1,
            hyper_depth: 1,
            heads: 4,
            hyper_heads: 4,
            mlp_ratio: 2,
            lambda: 1.0,
            seed: 0,
            symbol_min: -128,
            symbol_max: 127,
        }
    }

    /// A small configuration that trains in minutes on one core.
    pub fn tiny() -> Self {
        Self {
            channels: 4,
            height: 16,
            width: 32,
            patch: [2, 2],
            token_dim: 32,
            latent_channels: 4,
            hyper_patch: [4, 4],
            hyper_token_dim: 32,
            hyper_latent_channels: 4,
            windows: WindowSet {
                square: [4, 4],
                east_west: [2, 8],
                north_south: [8, 2],
            },
            hyper_windows: WindowSet {
                square: [2, 2],
                east_west: [1, 4],
                north_south: [2, 1],
            },
            depth: 1,
            hyper_depth: 1,
            heads: 2,
            hyper_heads: 2,
            mlp_ratio: 2,
            lambda: 1.0,
            seed: 0,
            symbol_min: -128,
            symbol_max: 127,
        }
    }

    pub fn token_grid(&self) -> (usize, usize) {
        (self.height / self.patch[0], self.width / self.patch[1])
    }

    /// Same as the token grid: one latent vector per token.
    pub fn latent_grid(&self) -> (usize, usize) {
        self.token_grid()
    }

    pub fn hyper_grid(&self) -> (usize, usize) {
        let (h, w) = self.latent_grid();
        (h / self.hyper_patch[0], w / self.hyper_patch[1])
    }

    /// Elements of y per instance.
    pub fn latent_len(&self) -> usize {
        let (h, w) = self.latent_grid();
        self.latent_channels * h * w
    }

    /// Elements of z per instance.
    pub fn hyper_len(&self) -> usize {
        let (h, w) = self.hyper_grid();
        self.hyper_latent_channels * h * w
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.channels == 0 || self.height == 0 || self.width == 0 {
            return bad("grid dimensions must be nonzero".into());
        }
        if self.patch.contains(&0) || self.height % self.patch[0] != 0 || self.width % self.patch[1] != 0 {
            return bad(format!(
                "patch {:?} does not divide the {}x{} grid",
                self.patch, self.height, self.width
            ));
        }
        let (th, tw) = self.token_grid();
        for spec in self.windows.specs()? {
            spec.check_divides(th, tw)?;
        }
        if self.hyper_patch.contains(&0) || th % self.hyper_patch[0] != 0 || tw % self.hyper_patch[1] != 0 {
            return bad(format!(
                "hyper patch {:?} does not divide the {th}x{tw} latent grid",
                self.hyper_patch
            ));
        }
        let (hh, hw) = self.hyper_grid();
        for spec in self.hyper_windows.specs()? {
            spec.check_divides(hh, hw)?;
        }
        if self.heads == 0 || self.token_dim % self.heads != 0 {
            return bad(format!("token_dim {} not divisible by {} heads", self.token_dim, self.heads));
        }
        if self.hyper_heads == 0 || self.hyper_token_dim % self.hyper_heads != 0 {
            return bad(format!(
                "hyper_token_dim {} not divisible by {} heads",
                self.hyper_token_dim, self.hyper_heads
            ));
        }
        if self.latent_channels == 0 || self.hyper_latent_channels == 0 || self.mlp_ratio == 0 {
            return bad("latent channels and mlp_ratio must be positive".into());
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return bad(format!("lambda must be positive, got {}", self.lambda));
        }
        if self.symbol_min >= self.symbol_max || self.symbol_max - self.symbol_min >= 1 << 14 {
            return bad(format!(
                "symbol range [{}, {}] invalid",
                self.symbol_min, self.symbol_max
            ));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Short hash of the canonical TOML form.
    pub fn hash(&self) -> u64 {
        hash::sha256_u64(self.to_toml().as_bytes())
    }

    /// Same network shape; only λ and the seed may differ.
    pub fn same_architecture(&self, other: &ModelConfig) -> bool {
        let mut a = self.clone();
        a.lambda = other.lambda;
        a.seed = other.seed;
        a == *other
    }
}
