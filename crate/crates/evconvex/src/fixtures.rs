//! Reference problems used by the reproduction harness and the tests.

use crate::copula::{Domain, KappaModel};
use crate::dist::Marginal1D;
use crate::feasibility::{CopulaSpec, Problem};
use crate::linalg::SpdMatrix;
use crate::thresholds::RowModel;

fn spd(rows: [[f64; 2]; 2]) -> SpdMatrix {
    SpdMatrix::new(rows.iter().map(|r| r.to_vec()).collect()).expect("fixture matrix is SPD")
}

/// Three Student-t₄ rows in two decision variables, r = −2 on every row.
pub fn three_row_student_rows() -> Vec<RowModel> {
    let mus = [[3.0, -4.0], [0.0, 1.0], [2.0, -1.0]];
    let ds = [22.0, 27.0, 2.0];
    let sigmas = [
        [[96.0, -11.0], [-11.0, 98.0]],
        [[44.0, 21.0], [21.0, 92.0]],
        [[90.0, -2.0], [-2.0, 24.0]],
    ];
    (0..3)
        .map(|i| RowModel {
            mu: mus[i].to_vec(),
            sigma: spd(sigmas[i]),
            d: ds[i],
            marginal: Marginal1D::Student { nu: 4.0 },
            r: -2.0,
        })
        .collect()
}

/// κ(x) = Σ 1/(x_i + 10) on the radius-7 ball.
pub fn three_row_student_kappa() -> KappaModel {
    KappaModel::BuiltSeparable {
        d: 1.0,
        c1: 1.0,
        c2: 10.0,
        domain: Domain::Ball {
            dim: 2,
            radius: 7.0,
        },
    }
}

/// The three-row Student problem with its Gumbel copula on the radius-7 ball.
pub fn three_row_student_problem() -> Problem {
    Problem {
        rows: three_row_student_rows(),
        copula: CopulaSpec::Gumbel {
            kappa: three_row_student_kappa(),
        },
        gh: None,
        domain: Domain::Ball {
            dim: 2,
            radius: 7.0,
        },
        origin_allowed: true,
    }
}

/// Three-dimensional row used for the Q/G region tables (b = 4).
pub fn region_table_row(r: f64) -> RowModel {
    RowModel {
        mu: vec![0.0, 28.0, -1.0],
        sigma: SpdMatrix::new(vec![
            vec![32.0, 20.0, 3.0],
            vec![20.0, 26.0, 23.0],
            vec![3.0, 23.0, 38.0],
        ])
        .expect("fixture matrix is SPD"),
        d: 4.0,
        marginal: Marginal1D::Gaussian,
        r,
    }
}

/// Level c₀ of the G region in the region tables.
pub const REGION_TABLE_C0: f64 = 20.0;
