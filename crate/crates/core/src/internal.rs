//! Data-generated internal solutions: the background orthonormal basis
//! `V0 Q0` combined with the measured-data reduced resolvent gives
//! `U(., λ) = V0 Q0 (T + λ I)^{-1} E1 R0` and its λ-derivative on the grid,
//! without knowing the medium.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::forward::{
    assemble_operator, background_model, dataset_from_fieldsets, solve_shifted, DiscreteOperator,
    FieldSet, Medium,
};
use crate::grid::Grid;
use crate::lanczos::{block_lanczos, LanczosFactorization};
use crate::rom::{build_rom, Rom};
use crate::scalar::Scalar;
use crate::spectral::{ArrayLayout, SpectralDataset};

/// Everything derived from the known background: snapshots for all L
/// receivers-as-sources, the background dataset, its ROM and Lanczos basis,
/// and the orthonormalized snapshot matrix `V0 Q0`.
pub struct BackgroundModel<F> {
    pub grid: Grid<F>,
    pub operator0: DiscreteOperator<F>,
    pub fields0: Vec<FieldSet<F>>,
    pub dataset0: SpectralDataset<F>,
    pub rom0: Rom<F>,
    pub lanczos0: LanczosFactorization<F>,
    /// `n x mK` matrix of background source snapshots, K columns per shift.
    pub v0: DMatrix<F>,
    /// Cached `V0 * Q0`; columns are orthonormal in the discrete inner
    /// product.
    pub v0q0: DMatrix<F>,
}

/// Internal solutions for the K sources at one shift, plus λ-derivatives.
#[derive(Clone, Debug)]
pub struct InternalFieldSet<F> {
    pub lambda: F,
    pub fields: DMatrix<F>,
    pub dfields: DMatrix<F>,
}

/// Solve the background problem at every shift, synthesize its dataset, and
/// build the background ROM and Lanczos basis from that synthesized data
/// (not from analytic Gram matrices).
pub fn build_background<F: Scalar>(
    grid: &Grid<F>,
    layout: &ArrayLayout<F>,
    lambdas: &[F],
) -> Result<BackgroundModel<F>> {
    let (operator0, fields0) = background_model(grid, layout, lambdas)?;
    let dataset0 = dataset_from_fieldsets(&operator0, layout, &fields0)?;
    let rom0 = build_rom(&dataset0.symmetric_part())?;
    let lanczos0 = block_lanczos(&rom0)?;

    let k = layout.num_tx();
    let n = grid.num_nodes();
    let mut v0 = DMatrix::zeros(n, lambdas.len() * k);
    for (j, fs) in fields0.iter().enumerate() {
        v0.view_mut((0, j * k), (n, k))
            .copy_from(&fs.fields.view((0, 0), (n, k)));
    }
    let v0q0 = &v0 * &lanczos0.q;

    Ok(BackgroundModel {
        grid: grid.clone(),
        operator0,
        fields0,
        dataset0,
        rom0,
        lanczos0,
        v0,
        v0q0,
    })
}

/// Internal solutions from the measured-data factorization `fac` expanded in
/// the background basis: fields `V0 Q0 (T + λ)^{-1} E1 R0` and derivatives
/// `-V0 Q0 (T + λ)^{-2} E1 R0`.
pub fn internal_field<F: Scalar>(
    bg: &BackgroundModel<F>,
    fac: &LanczosFactorization<F>,
    lambda: F,
) -> Result<InternalFieldSet<F>> {
    let (x1, x2) = fac.reduced_resolvent_powers(lambda)?;
    let fields = &bg.v0q0 * x1;
    let dfields = -(&bg.v0q0 * x2);
    Ok(InternalFieldSet {
        lambda,
        fields,
        dfields,
    })
}

/// Validation-mode oracle: exact forward-solved internal solutions of the
/// true medium, packaged identically to [`internal_field`] output.
pub fn cheated_field<F: Scalar>(
    medium_true: &Medium<F>,
    layout: &ArrayLayout<F>,
    lambda: F,
) -> Result<InternalFieldSet<F>> {
    let op = assemble_operator(medium_true);
    let fs = solve_shifted(&op, lambda, layout)?;
    Ok(InternalFieldSet {
        lambda,
        fields: fs.fields,
        dfields: fs.dfields,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::synthesize_dataset;
    use crate::rom::rom_transfer;
    use nalgebra::DVector;

    fn line_grid(n: usize) -> Grid<f64> {
        Grid::line(1.0, n).unwrap()
    }

    fn simo_layout() -> ArrayLayout<f64> {
        ArrayLayout::new(vec![[0.02, 0.0]], vec![[0.02, 0.0], [0.98, 0.0]], 0.0).unwrap()
    }

    const LAMBDAS: [f64; 5] = [1.0, 2.0, 14.0, 50.0, 128.0];

    fn bar_medium(grid: &Grid<f64>) -> Medium<f64> {
        let n = grid.num_nodes();
        let p = DVector::from_fn(n, |i, _| {
            let x = i as f64 / (n - 1) as f64;
            if (0.25..0.35).contains(&x) || (0.6..0.7).contains(&x) {
                2.0
            } else {
                0.0
            }
        });
        Medium::new(grid.clone(), p).unwrap()
    }

    #[test]
    fn background_transfer_interpolates_synthesized_background_data() {
        let grid = line_grid(101);
        let bg = build_background(&grid, &simo_layout(), &LAMBDAS).unwrap();
        for (j, &l) in LAMBDAS.iter().enumerate() {
            let t = rom_transfer(&bg.rom0, l).unwrap()[(0, 0)];
            let f = bg.dataset0.symmetric_part().point(j).f[(0, 0)];
            assert!((t - f).abs() <= 1e-8 * f.abs());
        }
    }

    fn basis_gram_deviation(grid: &Grid<f64>, bg: &BackgroundModel<f64>) -> f64 {
        let cols = bg.v0q0.ncols();
        let mut gram = DMatrix::zeros(cols, cols);
        for i in 0..cols {
            for j in 0..cols {
                gram[(i, j)] = grid.inner(
                    &bg.v0q0.column(i).into_owned(),
                    &bg.v0q0.column(j).into_owned(),
                );
            }
        }
        (&gram - DMatrix::identity(cols, cols)).norm()
    }

    #[test]
    fn orthonormal_basis_in_discrete_inner_product() {
        let grid = line_grid(101);
        let bg = build_background(&grid, &simo_layout(), &[1.0, 4.0, 16.0, 64.0, 256.0]).unwrap();
        let err = basis_gram_deviation(&grid, &bg);
        assert!(err <= 1e-8, "basis Gram deviation {err}");
    }

    #[test]
    fn orthonormality_floor_tracks_mass_conditioning() {
        // the paper's 1d shift set has adjacent shifts (1, 2) whose snapshots
        // are nearly parallel; kappa of the scaled mass is ~2e6 and the Gram
        // deviation floor is the Loewner-vs-Gram error times that kappa
        let grid = line_grid(101);
        let bg = build_background(&grid, &simo_layout(), &LAMBDAS).unwrap();
        let err = basis_gram_deviation(&grid, &bg);
        assert!(err <= 1e-7, "basis Gram deviation {err}");
    }

    #[test]
    fn single_shift_basis_is_normalized_snapshot() {
        let grid = line_grid(81);
        let bg = build_background(&grid, &simo_layout(), &[2.0]).unwrap();
        let u0 = bg.fields0[0].fields.column(0).into_owned();
        let norm = grid.inner(&u0, &u0).sqrt();
        let want = &u0 / norm;
        let got = bg.v0q0.column(0).into_owned();
        // sign convention is free
        let diff = ((&got - &want).norm()).min((&got + &want).norm());
        assert!(diff <= 1e-10 * want.norm());
    }

    #[test]
    fn background_data_reproduces_background_snapshots_exactly() {
        // measured medium = background: the Galerkin solution at an
        // interpolation shift is exact because the snapshot lies in the space
        let grid = line_grid(101);
        let layout = simo_layout();
        let bg = build_background(&grid, &layout, &LAMBDAS).unwrap();
        let d = synthesize_dataset(&Medium::background(grid.clone()), &layout, &LAMBDAS).unwrap();
        let rom = build_rom(&d.symmetric_part()).unwrap();
        let fac = block_lanczos(&rom).unwrap();
        for (j, &l) in LAMBDAS.iter().enumerate() {
            let internal = internal_field(&bg, &fac, l).unwrap();
            let truth = bg.fields0[j].fields.column(0).into_owned();
            let got = internal.fields.column(0).into_owned();
            let rel = (&got - &truth).norm() / truth.norm();
            assert!(rel <= 1e-8, "shift {l}: {rel}");
            // the derivative field is the derivative OF the Galerkin state,
            // not the projected true derivative: (A+λ)^{-2}g lies outside the
            // snapshot span, so agreement there is Galerkin-quality only
            let dtruth = bg.fields0[j].dfields.column(0).into_owned();
            let dgot = internal.dfields.column(0).into_owned();
            let drel = (&dgot - &dtruth).norm() / dtruth.norm();
            assert!(
                drel > 1e-12 && drel < 5e-2,
                "shift {l} derivative gap {drel} outside the expected Galerkin range"
            );
        }
    }

    #[test]
    fn derivative_fields_match_central_difference() {
        let grid = line_grid(101);
        let layout = simo_layout();
        let bg = build_background(&grid, &layout, &LAMBDAS).unwrap();
        let d = synthesize_dataset(&bar_medium(&grid), &layout, &LAMBDAS).unwrap();
        let fac = block_lanczos(&build_rom(&d.symmetric_part()).unwrap()).unwrap();
        let (lambda, h) = (14.0, 1e-5);
        let mid = internal_field(&bg, &fac, lambda).unwrap();
        let up = internal_field(&bg, &fac, lambda + h).unwrap();
        let dn = internal_field(&bg, &fac, lambda - h).unwrap();
        let fd = (&up.fields - &dn.fields) / (2.0 * h);
        let rel = (&fd - &mid.dfields).norm() / mid.dfields.norm();
        assert!(rel <= 1e-6, "derivative mismatch {rel}");
    }

    #[test]
    fn extended_columns_never_enter_internal_solutions() {
        // perturb and mask extended entries: bit-identical internal fields
        let grid = line_grid(101);
        let layout = simo_layout();
        let bg = build_background(&grid, &layout, &LAMBDAS).unwrap();
        let d = synthesize_dataset(&bar_medium(&grid), &layout, &LAMBDAS).unwrap();

        let mut perturbed_points = d.points().to_vec();
        for p in &mut perturbed_points {
            p.f[(0, 1)] += 17.0;
            p.df[(0, 1)] -= 3.0;
        }
        let d_perturbed =
            SpectralDataset::new(perturbed_points, d.num_tx(), d.num_rx()).unwrap();
        let masks = d
            .masks()
            .iter()
            .map(|m| {
                let mut m = m.clone();
                m[(0, 1)] = false;
                m
            })
            .collect();
        let d_masked = d.apply_mask(masks).unwrap();

        let fac = block_lanczos(&build_rom(&d.symmetric_part()).unwrap()).unwrap();
        let fac_p = block_lanczos(&build_rom(&d_perturbed.symmetric_part()).unwrap()).unwrap();
        let fac_m = block_lanczos(&build_rom(&d_masked.symmetric_part()).unwrap()).unwrap();
        for &l in &LAMBDAS {
            let a = internal_field(&bg, &fac, l).unwrap();
            let b = internal_field(&bg, &fac_p, l).unwrap();
            let c = internal_field(&bg, &fac_m, l).unwrap();
            for idx in 0..a.fields.len() {
                assert_eq!(a.fields[idx].to_bits(), b.fields[idx].to_bits());
                assert_eq!(a.fields[idx].to_bits(), c.fields[idx].to_bits());
                assert_eq!(a.dfields[idx].to_bits(), b.dfields[idx].to_bits());
            }
        }
    }

    #[test]
    fn cheated_equals_internal_on_background_medium() {
        let grid = line_grid(101);
        let layout = simo_layout();
        let bg = build_background(&grid, &layout, &LAMBDAS).unwrap();
        let medium0 = Medium::background(grid.clone());
        let d = synthesize_dataset(&medium0, &layout, &LAMBDAS).unwrap();
        let fac = block_lanczos(&build_rom(&d.symmetric_part()).unwrap()).unwrap();
        for &l in &LAMBDAS {
            let data_driven = internal_field(&bg, &fac, l).unwrap();
            let exact = cheated_field(&medium0, &layout, l).unwrap();
            let rel = (&data_driven.fields - &exact.fields).norm() / exact.fields.norm();
            assert!(rel <= 1e-8, "shift {l}: {rel}");
        }
    }

    #[test]
    fn cheated_reproduces_measured_transfer_values() {
        let grid = line_grid(101);
        let layout = simo_layout();
        let medium = bar_medium(&grid);
        let d = synthesize_dataset(&medium, &layout, &LAMBDAS).unwrap();
        let src = crate::forward::source_term(&grid, [0.02, 0.0], 0.0).unwrap();
        for (j, &l) in LAMBDAS.iter().enumerate() {
            let ch = cheated_field(&medium, &layout, l).unwrap();
            let val = src.inner(&grid, ch.fields.column(0));
            let f = d.point(j).f[(0, 0)];
            assert!((val - f).abs() <= 1e-12 * f.abs());
        }
    }

    #[test]
    fn data_driven_field_reproduces_transfer_only_at_background() {
        // <g, u(λj)> equals F^σ(λj) exactly when the data comes from the
        // background; for p != 0 the left normalization block differs
        // (R0 of the measured data vs R0 of the background), so equality is
        // not asserted there.
        let grid = line_grid(101);
        let layout = simo_layout();
        let bg = build_background(&grid, &layout, &LAMBDAS).unwrap();
        let d0 = synthesize_dataset(&Medium::background(grid.clone()), &layout, &LAMBDAS).unwrap();
        let fac0 = block_lanczos(&build_rom(&d0.symmetric_part()).unwrap()).unwrap();
        let src = crate::forward::source_term(&grid, [0.02, 0.0], 0.0).unwrap();
        for (j, &l) in LAMBDAS.iter().enumerate() {
            let field = internal_field(&bg, &fac0, l).unwrap();
            let val = src.inner(&grid, field.fields.column(0));
            let f = d0.point(j).f[(0, 0)];
            assert!((val - f).abs() <= 1e-8 * f.abs(), "shift {l}");
        }
    }

    #[test]
    fn cheated_and_data_driven_differ_off_data_shifts_for_nonzero_p() {
        let grid = line_grid(101);
        let layout = simo_layout();
        let medium = bar_medium(&grid);
        let bg = build_background(&grid, &layout, &LAMBDAS).unwrap();
        let d = synthesize_dataset(&medium, &layout, &LAMBDAS).unwrap();
        let fac = block_lanczos(&build_rom(&d.symmetric_part()).unwrap()).unwrap();
        let lambda = 7.31; // not a data shift
        let a = internal_field(&bg, &fac, lambda).unwrap();
        let b = cheated_field(&medium, &layout, lambda).unwrap();
        let rel = (&a.fields - &b.fields).norm() / b.fields.norm();
        assert!(rel > 1e-10, "approximation collapsed to exact: {rel}");
    }
}
