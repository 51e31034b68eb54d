use super::state::PlantState;
use crate::error::{Error, Result};
use crate::kinetics::{Components, N_COMPONENTS};

/// Redistributes material held in consecutive segments (thickness, mass per
/// area) onto `n` equally thick layers, conserving every component.
pub(crate) fn remap_equal(segments: &[(f64, [f64; N_COMPONENTS])], n: usize) -> Vec<[f64; N_COMPONENTS]> {
    let total: f64 = segments.iter().map(|(h, _)| h).sum();
    let mut out = vec![[0.0; N_COMPONENTS]; n];
    if total <= 0.0 {
        // Nothing to spread: keep the masses in the innermost layer.
        for (_, m) in segments {
            for k in 0..N_COMPONENTS {
                out[0][k] += m[k];
            }
        }
        return out;
    }
    let width = total / n as f64;
    let mut z0 = 0.0;
    for (h, m) in segments {
        if *h <= 0.0 {
            continue;
        }
        let z1 = z0 + h;
        let first = ((z0 / width).floor() as usize).min(n - 1);
        let last = (((z1 / width).ceil() as usize).max(first + 1)).min(n);
        for (j, target) in out.iter_mut().enumerate().take(last).skip(first) {
            let lo = z0.max(j as f64 * width);
            let hi = if j == n - 1 { z1 } else { z1.min((j + 1) as f64 * width) };
            let share = ((hi - lo) / h).max(0.0);
            for k in 0..N_COMPONENTS {
                target[k] += share * m[k];
            }
        }
        z0 = z1;
    }
    // Round-off in the shares must not create or destroy mass.
    for k in 0..N_COMPONENTS {
        let before: f64 = segments.iter().map(|(_, m)| m[k]).sum();
        let after: f64 = out.iter().map(|m| m[k]).sum();
        if after != 0.0 && before != after {
            let scale = before / after;
            for m in out.iter_mut() {
                m[k] *= scale;
            }
        }
    }
    out
}

/// Removes `f_bw` of the film thickness from the surface of every tank,
/// never going below the residual floor, and books the removed mass (g) into
/// the sludge ledger. The liquid is left untouched.
pub fn apply_backwash(s: &mut PlantState, film_area: f64, f_bw: f64) -> Result<Components> {
    if !(0.0..=1.0).contains(&f_bw) {
        return Err(Error::invalid("f_bw", format!("must lie in [0, 1], got {f_bw}")));
    }
    let layout = s.layout;
    let geometry = s.geometry;
    let n = layout.n_layers;
    let mut removed_total = Components::ZERO;

    for tank in 0..layout.n_tanks {
        let thickness = s.film_thickness(tank);
        let cut = (f_bw * thickness).min(thickness - geometry.l_min).max(0.0);
        if cut <= 0.0 {
            continue;
        }
        let h = thickness / n as f64;
        let mut to_cut = cut;
        let mut segments: Vec<(f64, [f64; N_COMPONENTS])> = Vec::with_capacity(n);
        let mut removed = [0.0; N_COMPONENTS];
        for l in (0..n).rev() {
            let m = s.layer_mass(tank, l).to_array();
            let take = to_cut.min(h);
            to_cut -= take;
            let frac = take / h;
            for k in 0..N_COMPONENTS {
                removed[k] += frac * m[k];
            }
            let keep = h - take;
            if keep > 0.0 {
                segments.push((keep, m.map(|v| v * (1.0 - frac))));
            }
        }
        segments.reverse();
        let layers = remap_equal(&segments, n);
        for (l, m) in layers.iter().enumerate() {
            let o = layout.layer(tank, l);
            s.y[o..o + N_COMPONENTS].copy_from_slice(m);
        }
        removed_total = removed_total + Components::from_array(removed) * film_area;
    }
    s.sludge.removed = s.sludge.removed + removed_total;
    Ok(removed_total)
}
