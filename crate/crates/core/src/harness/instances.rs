//! The named figure instances.

use crate::error::{Error, Result};
use crate::measures::{DiscreteMeasure, Instance, Metric};

pub const INSTANCE_NAMES: [&str; 6] = ["fig1", "fig3", "fig4-top", "fig4-mid", "fig4-bottom", "fig7"];

/// `n` equally spaced values from `lo` to `hi`, both included.
fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

/// Tensor grid over `[x0, x1] x [y0, y1]`, x-major.
fn grid(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Vec<Vec<f64>> {
    let ys = linspace(y.0, y.1, ny);
    linspace(x.0, x.1, nx)
        .into_iter()
        .flat_map(|a| ys.iter().map(move |&b| vec![a, b]))
        .collect()
}

fn fig1_measures() -> Result<(DiscreteMeasure, DiscreteMeasure)> {
    let blue = [-2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0]
        .iter()
        .map(|&x| vec![x, 0.0])
        .collect();
    let red = [-1.367, -0.867, 0.867, 1.367]
        .iter()
        .map(|&y| vec![0.0, y])
        .collect();
    Ok((DiscreteMeasure::uniform(blue)?, DiscreteMeasure::uniform(red)?))
}

fn fig4_square() -> Result<DiscreteMeasure> {
    DiscreteMeasure::uniform(grid((0.0, 1.0), (0.0, 1.0), 20, 20))
}

/// Builds a named instance:
///
/// * `fig1`: 8 points on the horizontal axis against 4 on the vertical one;
/// * `fig3`: `fig1` with the Chebyshev metric;
/// * `fig4-top`: a 20x20 grid of the unit square against `(1,2)` and `(2,1)`;
/// * `fig4-mid`: as `fig4-top` with weights `0.1` and `0.9` on the targets;
/// * `fig4-bottom`: 10x10 grids of `[-0.25,0.25]^2` and `[1.25,1.5]x[-0.5,0.5]`;
/// * `fig7`: a 4x2 grid against 8 points on a segment.
///
/// All measures are uniform unless stated otherwise; grids include their
/// endpoints.
pub fn generate_instance(name: &str) -> Result<Instance> {
    match name {
        "fig1" => {
            let (mu, nu) = fig1_measures()?;
            Instance::new(mu, nu, Metric::Euclidean)
        }
        "fig3" => {
            let (mu, nu) = fig1_measures()?;
            Instance::new(mu, nu, Metric::Chebyshev)
        }
        "fig4-top" => {
            let nu = DiscreteMeasure::uniform(vec![vec![1.0, 2.0], vec![2.0, 1.0]])?;
            Instance::new(fig4_square()?, nu, Metric::Euclidean)
        }
        "fig4-mid" => {
            let nu = DiscreteMeasure::new(vec![vec![1.0, 2.0], vec![2.0, 1.0]], vec![0.1, 0.9])?;
            Instance::new(fig4_square()?, nu, Metric::Euclidean)
        }
        "fig4-bottom" => {
            let mu = DiscreteMeasure::uniform(grid((-0.25, 0.25), (-0.25, 0.25), 10, 10))?;
            let nu = DiscreteMeasure::uniform(grid((1.25, 1.5), (-0.5, 0.5), 10, 10))?;
            Instance::new(mu, nu, Metric::Euclidean)
        }
        "fig7" => {
            let mu = [-0.25, -0.125, 0.0, 0.125]
                .iter()
                .flat_map(|&a| [-0.1, 0.1].map(|b| vec![a, b]))
                .collect();
            let nu = (0..8)
                .map(|k| {
                    let t = k as f64 / 7.0;
                    vec![0.625 + 0.625 * t, 1.25 - 1.25 * t]
                })
                .collect();
            Instance::new(
                DiscreteMeasure::uniform(mu)?,
                DiscreteMeasure::uniform(nu)?,
                Metric::Euclidean,
            )
        }
        other => Err(Error::UnknownInstance(other.to_string())),
    }
}
