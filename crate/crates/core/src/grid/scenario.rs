//! Scenario files: analytic phantoms for `a`, `f` and their perturbations,
//! grid and sinogram resolutions, quadrature step and seed.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

use super::sobolev::FIELD_MARGIN;
use super::{quadrature, Domain, Field, GridSpec, Phantom, Placement, Primitive, Profile, RegionMask, SinogramGeometry};

fn one() -> f64 {
    1.0
}

fn four() -> f64 {
    4.0
}

/// One analytic primitive as written in a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum PrimitiveSpec {
    Disk {
        #[serde(default)]
        center: Point,
        radius: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        mollify_width: f64,
        #[serde(default)]
        matrix: Option<[[f64; 2]; 2]>,
    },
    Gaussian {
        #[serde(default)]
        center: Point,
        sigma: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        matrix: Option<[[f64; 2]; 2]>,
    },
    Annulus {
        #[serde(default)]
        center: Point,
        r_in: f64,
        r_out: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        mollify_width: f64,
        #[serde(default)]
        matrix: Option<[[f64; 2]; 2]>,
    },
    Bump {
        #[serde(default)]
        center: Point,
        radius: f64,
        #[serde(default = "four")]
        power: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        matrix: Option<[[f64; 2]; 2]>,
    },
}

impl PrimitiveSpec {
    pub fn build(&self) -> Result<Primitive> {
        let (profile, center, amplitude, matrix) = match *self {
            PrimitiveSpec::Disk {
                center,
                radius,
                amplitude,
                mollify_width,
                matrix,
            } => (
                Profile::Disk {
                    radius,
                    mollify: mollify_width,
                },
                center,
                amplitude,
                matrix,
            ),
            PrimitiveSpec::Gaussian {
                center,
                sigma,
                amplitude,
                matrix,
            } => (Profile::Gaussian { sigma }, center, amplitude, matrix),
            PrimitiveSpec::Annulus {
                center,
                r_in,
                r_out,
                amplitude,
                mollify_width,
                matrix,
            } => (
                Profile::Annulus {
                    r_in,
                    r_out,
                    mollify: mollify_width,
                },
                center,
                amplitude,
                matrix,
            ),
            PrimitiveSpec::Bump {
                center,
                radius,
                power,
                amplitude,
                matrix,
            } => (Profile::Bump { radius, power }, center, amplitude, matrix),
        };
        profile.validate()?;
        if !amplitude.is_finite() || !center.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite primitive parameter".into()));
        }
        let placement = match matrix {
            Some(m) => Placement::affine(center, m)?,
            None => Placement::at(center),
        };
        Ok(Primitive::centered(profile, amplitude).with_placement(placement))
    }
}

/// Which microlocal symbol the geometric commands use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolChoice {
    /// `W` built from the weights of the identification problem for `(a, f)`.
    #[default]
    Identification,
    /// Weights `w1 = ½θ·x`, `w2 = 1`, so `W = θ·x`.
    ExRadial,
}

/// A compact set `K` given analytically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Region {
    /// `r_in ≤ |x| ≤ r_out`, optionally minus the sector of half-width `gap_half_width_deg`
    /// around polar angle `gap_center_deg`.
    Annulus {
        r_in: f64,
        r_out: f64,
        #[serde(default)]
        gap_center_deg: f64,
        #[serde(default)]
        gap_half_width_deg: f64,
    },
    Disk {
        #[serde(default)]
        center: Point,
        radius: f64,
    },
}

impl Region {
    pub fn annulus(r_in: f64, r_out: f64) -> Self {
        Region::Annulus {
            r_in,
            r_out,
            gap_center_deg: 0.0,
            gap_half_width_deg: 0.0,
        }
    }

    pub fn annulus_with_gap(r_in: f64, r_out: f64, gap_center_deg: f64, gap_half_width_deg: f64) -> Self {
        Region::Annulus {
            r_in,
            r_out,
            gap_center_deg,
            gap_half_width_deg,
        }
    }

    pub fn contains(&self, x: Point) -> bool {
        match *self {
            Region::Annulus {
                r_in,
                r_out,
                gap_center_deg,
                gap_half_width_deg,
            } => {
                let r = x[0].hypot(x[1]);
                if r < r_in || r > r_out {
                    return false;
                }
                if gap_half_width_deg <= 0.0 {
                    return true;
                }
                let phi = x[1].atan2(x[0]).to_degrees() - gap_center_deg;
                let phi = (phi + 180.0).rem_euclid(360.0) - 180.0;
                phi.abs() >= gap_half_width_deg
            }
            Region::Disk { center, radius } => {
                (x[0] - center[0]).hypot(x[1] - center[1]) <= radius
            }
        }
    }

    /// Largest `|x|∞` reached by the region.
    fn extent(&self) -> f64 {
        match *self {
            Region::Annulus { r_out, .. } => r_out,
            Region::Disk { center, radius } => center[0].abs().max(center[1].abs()) + radius,
        }
    }

    pub fn mask(&self, grid: GridSpec) -> Result<RegionMask> {
        RegionMask::from_predicate(grid, |x| self.contains(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSize {
    pub nx: usize,
    pub ny: usize,
}

impl Default for GridSize {
    fn default() -> Self {
        Self { nx: 256, ny: 256 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadSpec {
    #[serde(default)]
    pub h: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbations {
    #[serde(default)]
    pub da: Vec<PrimitiveSpec>,
    #[serde(default)]
    pub df: Vec<PrimitiveSpec>,
    #[serde(default)]
    pub epsilon: Option<f64>,
}

/// The scenario file as written on disk.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub domain: Domain,
    #[serde(default)]
    pub grid: GridSize,
    #[serde(default)]
    pub sinogram: SinogramGeometry,
    #[serde(default)]
    pub quad: QuadSpec,
    #[serde(default)]
    pub a: Vec<PrimitiveSpec>,
    #[serde(default)]
    pub f: Vec<PrimitiveSpec>,
    #[serde(default)]
    pub perturbations: Perturbations,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub symbol: SymbolChoice,
    #[serde(default)]
    pub region: Option<Region>,
}

/// Validated scenario with defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub grid: GridSpec,
    pub sinogram: SinogramGeometry,
    pub h: f64,
    pub a: Phantom,
    pub f: Phantom,
    pub da: Phantom,
    pub df: Phantom,
    pub epsilon: f64,
    pub seed: u64,
    pub symbol: SymbolChoice,
    pub region: Option<Region>,
    pub source: ScenarioFile,
}

impl ScenarioSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(Error::Schema("scenario file is empty".into()));
        }
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let inner = e.inner();
            Error::Schema(format!(
                "at `{}` (line {}, column {}): {}",
                e.path(),
                inner.line(),
                inner.column(),
                inner
            ))
        })?;
        Self::from_file(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn from_file(file: ScenarioFile) -> Result<Self> {
        let grid = GridSpec::new(file.grid.nx, file.grid.ny, file.domain)
            .map_err(|e| Error::Schema(e.to_string()))?;
        file.sinogram
            .validate()
            .map_err(|e| Error::Schema(e.to_string()))?;
        let h = file.quad.h.unwrap_or_else(|| quadrature::default_h(&file.domain));
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Schema(format!("quad.h must be positive, got {h}")));
        }
        let epsilon = file.perturbations.epsilon.unwrap_or(1e-2);
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::Schema("perturbations.epsilon must be positive".into()));
        }
        let build = |name: &str, list: &[PrimitiveSpec]| -> Result<Phantom> {
            let mut prims = Vec::with_capacity(list.len());
            for (k, p) in list.iter().enumerate() {
                let prim = p
                    .build()
                    .map_err(|e| Error::Schema(format!("{name}[{k}]: {e}")))?;
                check_primitive_margin(&grid, &prim, &format!("{name}[{k}]"))?;
                prims.push(prim);
            }
            Ok(Phantom::new(prims))
        };
        let a = build("a", &file.a)?;
        let f = build("f", &file.f)?;
        let da = build("perturbations.da", &file.perturbations.da)?;
        let df = build("perturbations.df", &file.perturbations.df)?;
        if let Some(region) = &file.region {
            let limit = margin_limit(&grid);
            if region.extent() > limit {
                return Err(Error::OutsideMargin {
                    what: "region".into(),
                    extent: region.extent(),
                    limit,
                });
            }
        }
        Ok(Self {
            grid,
            sinogram: file.sinogram,
            h,
            a,
            f,
            da,
            df,
            epsilon,
            seed: file.seed,
            symbol: file.symbol,
            region: file.region,
            source: file,
        })
    }

    /// Canonical JSON of the source file, used for hashing.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(&self.source).expect("scenario serializes")
    }
}

/// Half-width of the square that primitives must stay inside, for a domain
/// centred at the origin; general domains use the tightest side.
fn margin_limit(grid: &GridSpec) -> f64 {
    let d = &grid.domain;
    let mx = FIELD_MARGIN as f64 * grid.dx();
    let my = FIELD_MARGIN as f64 * grid.dy();
    (d.xmax - mx)
        .min(-(d.xmin + mx))
        .min(d.ymax - my)
        .min(-(d.ymin + my))
}

fn check_primitive_margin(grid: &GridSpec, prim: &Primitive, what: &str) -> Result<()> {
    let Some(disk) = prim.support() else {
        return Ok(());
    };
    let d = &grid.domain;
    let mx = FIELD_MARGIN as f64 * grid.dx();
    let my = FIELD_MARGIN as f64 * grid.dy();
    let c = disk.center;
    let r = disk.radius;
    let overshoot = [
        (d.xmin + mx) - (c[0] - r),
        (c[0] + r) - (d.xmax - mx),
        (d.ymin + my) - (c[1] - r),
        (c[1] + r) - (d.ymax - my),
    ]
    .into_iter()
    .fold(f64::MIN, f64::max);
    if overshoot > 0.0 {
        return Err(Error::OutsideMargin {
            what: what.to_string(),
            extent: c[0].abs().max(c[1].abs()) + r,
            limit: margin_limit(grid),
        });
    }
    Ok(())
}
