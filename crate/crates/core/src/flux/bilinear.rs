use crate::error::KernelError;
use crate::expr::{
    partial, substitute, total_derivative_multi, Atom, DiffExpr, MultiIndex, Substitution,
};

/// Boundary operator of the identity `W L_F V - V L*_F W = D_i S^i`:
///
/// `S^i = sum (-1)^q (D_{i_1..i_p} V^rho) D_{j_1..j_q}(W_sigma dF^sigma/dU^rho_{j_1..j_q i i_1..i_p})`
///
/// over `j_1 <= .. <= j_q <= i <= i_1 <= .. <= i_p`. Each jet of `F` with a
/// nonzero `i` count is split once per position of `i` in its sorted
/// variable sequence. The partial derivatives are evaluated at `at` when
/// given.
pub fn bilinear_s(
    v: &[DiffExpr],
    w: &[DiffExpr],
    f: &[DiffExpr],
    i: usize,
    at: Option<&Substitution>,
) -> Result<DiffExpr, KernelError> {
    let mut out = DiffExpr::zero();
    for (sigma, fs) in f.iter().enumerate() {
        let Some(ws) = w.get(sigma) else { continue };
        if ws.is_empty() {
            continue;
        }
        for jet in fs.jets() {
            if jet.index.count(i) == 0 {
                continue;
            }
            let Some(vr) = v.get(jet.dep) else { continue };
            if vr.is_empty() {
                continue;
            }
            let mut dfdu = partial(fs, &Atom::Jet(jet.clone()));
            if let Some(sub) = at {
                dfdu = substitute(&dfdu, sub)?;
            }
            let weighted = ws * &dfdu;
            let seq = jet.index.sorted_vars();
            for pos in (0..seq.len()).filter(|&p| seq[p] == i) {
                let before = MultiIndex::from_vars(&seq[..pos]);
                let after = MultiIndex::from_vars(&seq[pos + 1..]);
                let left = total_derivative_multi(vr, &after);
                let right = total_derivative_multi(&weighted, &before);
                let term = &left * &right;
                out = if before.order() % 2 == 1 {
                    out - term
                } else {
                    out + term
                };
            }
        }
    }
    Ok(out)
}
