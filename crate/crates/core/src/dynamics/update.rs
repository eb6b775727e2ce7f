use rayon::prelude::*;

use super::LFunctional;
use crate::error::{Error, Result};
use crate::objectives::PotentialField;
use crate::state::DriverState;

/// Cells per rayon job when elementwise work is parallelized.
const PAR_CHUNK: usize = 4096;

#[inline]
pub(crate) fn factor(l: &LFunctional, q: f64, h: f64, nu: f64, lambda: f64) -> f64 {
    l.eval(q, nu * h) / nu + lambda
}

/// Writes `K_i` into `out`. Zero densities give exactly zero. Fails on the
/// lowest-indexed cell whose factor is not positive.
pub(crate) fn fill_interaction(
    out: &mut [f64],
    h: &[f64],
    q: &[f64],
    nu: f64,
    lambda: f64,
    l: &LFunctional,
    parallel: bool,
    step: u64,
) -> Result<()> {
    let kernel = |(k, (&hi, &qi)): (&mut f64, (&f64, &f64))| {
        *k = if hi > 0.0 { hi * factor(l, qi, hi, nu, lambda) } else { 0.0 };
    };
    if parallel && out.len() >= 2 * PAR_CHUNK {
        out.par_chunks_mut(PAR_CHUNK)
            .zip(h.par_chunks(PAR_CHUNK).zip(q.par_chunks(PAR_CHUNK)))
            .for_each(|(o, (hc, qc))| o.iter_mut().zip(hc.iter().zip(qc)).for_each(kernel));
    } else {
        out.iter_mut().zip(h.iter().zip(q)).for_each(kernel);
    }
    for (i, (&k, &hi)) in out.iter().zip(h).enumerate() {
        if hi > 0.0 && !(k > 0.0 && k.is_finite()) {
            let f = factor(l, q[i], hi, nu, lambda);
            // a positive factor times a subnormal density may underflow
            if !(f > 0.0 && f.is_finite()) || !k.is_finite() {
                return Err(Error::CertificateViolated { cell: i, factor: f, step });
            }
        }
    }
    Ok(())
}

/// `sum_i K_i`, accumulated in index order.
pub(crate) fn normalizer(k: &[f64]) -> Result<f64> {
    let z = k.iter().sum::<f64>();
    if z > 0.0 && z.is_finite() {
        Ok(z)
    } else {
        Err(Error::AnnihilatedMass)
    }
}

fn check_field(state: &DriverState, field: &PotentialField) -> Result<()> {
    if state.same_grid(field.grid()) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// Interaction weights `K_i = h_i ((1/nu) L(q_i, nu h_i) + lambda)`.
pub fn interaction(state: &DriverState, field: &PotentialField, lambda: f64, l: &LFunctional) -> Result<Vec<f64>> {
    check_field(state, field)?;
    let mut k = vec![0.0; state.len()];
    fill_interaction(&mut k, state.values(), field.values(), state.budget(), lambda, l, false, state.step())?;
    Ok(k)
}

/// Growth transform `g_i = K_i / sum_j K_j dV`.
pub fn growth_map(state: &DriverState, field: &PotentialField, lambda: f64, l: &LFunctional) -> Result<DriverState> {
    let mut k = interaction(state, field, lambda, l)?;
    let z = normalizer(&k)?;
    let dv = state.grid().cell_volume();
    k.iter_mut().for_each(|v| *v = *v / z / dv);
    Ok(DriverState::from_parts_unchecked(k, state.budget(), state.grid().clone(), state.step()))
}

/// Convex combination `(1 - alpha) h + alpha g`.
pub fn homotopy_step(state: &DriverState, target: &DriverState, alpha: f64) -> Result<DriverState> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !state.same_grid(target.grid()) {
        return Err(Error::GridMismatch);
    }
    if state.budget() != target.budget() {
        return Err(Error::BudgetMismatch(state.budget(), target.budget()));
    }
    let values = state
        .values()
        .iter()
        .zip(target.values())
        .map(|(&h, &g)| h + alpha * (g - h))
        .collect();
    Ok(DriverState::from_parts_unchecked(values, state.budget(), state.grid().clone(), state.step() + 1))
}

/// Discrete growth transform on budgeted masses:
/// `p'_i = nu p_i (-grad_i + lambda) / sum_j p_j (-grad_j + lambda)` with `nu = sum p`.
pub fn discrete_growth_update(p: &[f64], grad: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if p.len() != grad.len() {
        return Err(Error::LengthMismatch { expected: p.len(), got: grad.len() });
    }
    if let Some(i) = p.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidValues(format!("mass {i} is {}", p[i])));
    }
    let nu: f64 = p.iter().sum();
    let mut weighted = Vec::with_capacity(p.len());
    for (i, (&pi, &gi)) in p.iter().zip(grad).enumerate() {
        if pi == 0.0 {
            weighted.push(0.0);
            continue;
        }
        let f = -gi + lambda;
        if !(f > 0.0 && f.is_finite()) {
            return Err(Error::CertificateViolated { cell: i, factor: f, step: 0 });
        }
        weighted.push(pi * f);
    }
    let total: f64 = weighted.iter().sum();
    if !(total > 0.0) {
        return Err(Error::AnnihilatedMass);
    }
    Ok(weighted.into_iter().map(|w| nu * w / total).collect())
}

/// Surrogate energy `H = sum_i (-sigma q_i h_i - (nu/2) h_i^2) dV`, whose
/// negative gradient in `h_i` is `L(q_i, nu h_i) dV`.
pub fn energy(state: &DriverState, field: &PotentialField, l: &LFunctional) -> Result<f64> {
    check_field(state, field)?;
    Ok(energy_raw(state.values(), field.values(), state.budget(), state.grid().cell_volume(), l))
}

pub(crate) fn energy_raw(h: &[f64], q: &[f64], nu: f64, cell_volume: f64, l: &LFunctional) -> f64 {
    let s = l.sigma();
    let half_nu = 0.5 * nu;
    let e: f64 = h.iter().zip(q).map(|(&h, &q)| -s * q * h - half_nu * h * h).sum();
    e * cell_volume
}

/// Linearized gain `A(p_before, p_after) = sum_i (-grad_i + lambda)(after_i - before_i)`.
pub fn auxiliary_gain(before: &[f64], after: &[f64], grad: &[f64], lambda: f64) -> f64 {
    before
        .iter()
        .zip(after)
        .zip(grad)
        .map(|((&b, &a), &g)| (-g + lambda) * (a - b))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::sync::Arc;

    fn two_cell() -> (DriverState, PotentialField) {
        let g = Arc::new(Grid::indexed(2).unwrap());
        let s = DriverState::uniform(g.clone(), 1.0).unwrap();
        let f = PotentialField::from_table(vec![0.0, 1.0], g).unwrap();
        (s, f)
    }

    #[test]
    fn interaction_worked_example() {
        let (s, f) = two_cell();
        let k = interaction(&s, &f, 1.5, &LFunctional::minimizing()).unwrap();
        assert_eq!(k, vec![1.0, 0.5]);
        // printed sign: mass would move to the larger q
        let k = interaction(&s, &f, 1.5, &LFunctional::maximizing()).unwrap();
        assert_eq!(k, vec![1.0, 1.5]);
    }

    #[test]
    fn interaction_zero_density_and_symmetry() {
        let g = Arc::new(Grid::indexed(3).unwrap());
        let s = DriverState::from_densities(vec![0.0, 0.5, 0.5], g.clone(), 1.0).unwrap();
        let f = PotentialField::from_table(vec![0.0, 1.0, 2.0], g.clone()).unwrap();
        let k = interaction(&s, &f, 3.0, &LFunctional::minimizing()).unwrap();
        assert_eq!(k[0], 0.0);
        assert!(k[1] > 0.0 && k[2] > 0.0);

        let c = PotentialField::from_table(vec![4.0; 3], g.clone()).unwrap();
        let u = DriverState::uniform(g, 1.0).unwrap();
        let k = interaction(&u, &c, 5.0, &LFunctional::minimizing()).unwrap();
        assert!(k.iter().all(|&v| v == k[0]));
    }

    #[test]
    fn interaction_rejects_broken_certificate() {
        let (s, f) = two_cell();
        let err = interaction(&s, &f, 0.2, &LFunctional::minimizing()).unwrap_err();
        assert!(matches!(err, Error::CertificateViolated { cell: 1, .. }));
    }

    #[test]
    fn growth_map_examples() {
        let (s, f) = two_cell();
        let l = LFunctional::minimizing();
        let g = growth_map(&s, &f, 1.5, &l).unwrap();
        assert!((g.values()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((g.values()[1] - 1.0 / 3.0).abs() < 1e-15);

        let d = DriverState::vertex(s.grid().clone(), 1.0, 1).unwrap();
        assert_eq!(growth_map(&d, &f, 1.5, &l).unwrap().values(), d.values());
    }

    #[test]
    fn homotopy_example() {
        let (s, f) = two_cell();
        let l = LFunctional::minimizing();
        let g = growth_map(&s, &f, 1.5, &l).unwrap();
        let next = homotopy_step(&s, &g, 0.1).unwrap();
        assert!((next.values()[0] - (0.9 * 0.5 + 0.1 * 2.0 / 3.0)).abs() < 1e-15);
        assert!((next.values()[0] - 0.516_666_666_666_666_7).abs() < 1e-15);
        assert!((next.values()[1] - 0.483_333_333_333_333_3).abs() < 1e-15);
        assert!((next.total_mass() - 1.0).abs() <= 1e-12);
        assert_eq!(next.step(), 1);

        let same = homotopy_step(&s, &s, 0.3).unwrap();
        assert_eq!(same.values(), s.values());
    }

    #[test]
    fn homotopy_rejects_mismatch() {
        let (s, _) = two_cell();
        let other = s.clone().with_budget(2.0).unwrap();
        assert!(matches!(homotopy_step(&s, &other, 0.1), Err(Error::BudgetMismatch(..))));
        let g3 = DriverState::uniform(Arc::new(Grid::indexed(3).unwrap()), 1.0).unwrap();
        assert_eq!(homotopy_step(&s, &g3, 0.1), Err(Error::GridMismatch));
        assert!(homotopy_step(&s, &s, 1.0).is_err());
    }

    #[test]
    fn discrete_update_examples() {
        let out = discrete_growth_update(&[0.5, 0.5], &[1.0, 0.0], 2.0).unwrap();
        assert!((out[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((out[1] - 2.0 / 3.0).abs() < 1e-15);

        let p = [0.2, 0.3, 0.5];
        assert_eq!(discrete_growth_update(&p, &[0.7; 3], 2.0).unwrap(), p.to_vec());

        let out = discrete_growth_update(&[0.0, 0.4, 0.6], &[-5.0, 0.0, 1.0], 2.0).unwrap();
        assert_eq!(out[0], 0.0);
        assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-15);

        assert!(discrete_growth_update(&[0.5, 0.5], &[3.0, 0.0], 2.0).is_err());
    }

    #[test]
    fn energy_examples() {
        let (s, f) = two_cell();
        let l = LFunctional::minimizing();
        assert!((energy(&s, &f, &l).unwrap() - 0.25).abs() < 1e-15);
        let g = growth_map(&s, &f, 1.5, &l).unwrap();
        let e = energy(&g, &f, &l).unwrap();
        assert!((e - 1.0 / 18.0).abs() < 1e-15);
        assert!(e < 0.25);
    }

    #[test]
    fn auxiliary_gain_examples() {
        let before = [0.5, 0.5];
        let grad = [1.0, 0.0];
        assert_eq!(auxiliary_gain(&before, &before, &grad, 2.0), 0.0);
        let after = discrete_growth_update(&before, &grad, 2.0).unwrap();
        let gain = auxiliary_gain(&before, &after, &grad, 2.0);
        assert!((gain - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(auxiliary_gain(&after, &before, &grad, 2.0), -gain);
    }
}
