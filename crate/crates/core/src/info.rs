//! Entropy and information measures. Everything is computed in nats and
//! converted only where a base is requested.

use alloc::format;

use crate::math::{ln, xlnx};
use crate::{DiscreteDistribution, Error, JointDistribution, Result, SUM_TOLERANCE};

fn entropy_nats(p: &[f64]) -> f64 {
    // clamp the -0.0 from a deterministic outcome
    (-p.iter().map(|&x| xlnx(x)).sum::<f64>()).max(0.0)
}

/// Shannon entropy `−Σ p_i log_b p_i`, with `0 log 0 = 0`.
pub fn entropy_shannon(dist: &DiscreteDistribution, log_base: f64) -> Result<f64> {
    if !(log_base > 1.0) || !log_base.is_finite() {
        return Err(Error::validation(format!("log base {log_base} must be > 1")));
    }
    Ok(entropy_nats(dist.probs()) / ln(log_base))
}

/// Gibbs entropy `−k_B Σ p_i ln p_i`.
pub fn entropy_gibbs(dist: &DiscreteDistribution, k_b: f64) -> Result<f64> {
    if !(k_b > 0.0) || !k_b.is_finite() {
        return Err(Error::validation(format!("k_B = {k_b} must be > 0")));
    }
    Ok(k_b * entropy_nats(dist.probs()))
}

/// Information gain in bits of splitting `parent` into weighted `children`.
pub fn info_gain(parent: &DiscreteDistribution, children: &[(f64, DiscreteDistribution)]) -> Result<f64> {
    if children.is_empty() {
        return Err(Error::validation("information gain needs at least one child"));
    }
    let mut weight_sum = 0.0;
    let mut child_entropy = 0.0;
    for (i, (w, child)) in children.iter().enumerate() {
        if !(*w >= 0.0) || !w.is_finite() {
            return Err(Error::validation(format!("child {i} weight {w} must be >= 0")));
        }
        weight_sum += w;
        child_entropy += w * entropy_shannon(child, 2.0)?;
    }
    if (weight_sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::validation(format!("child weights sum to {weight_sum}, expected 1")));
    }
    Ok(entropy_shannon(parent, 2.0)? - child_entropy)
}

/// `KL(q ‖ p) = Σ q_i ln(q_i / p_i)` in nats.
///
/// A positive `q_i` where `p_i = 0` is a domain error rather than `+∞`.
pub fn kl_divergence(q: &DiscreteDistribution, p: &DiscreteDistribution) -> Result<f64> {
    if q.len() != p.len() {
        return Err(Error::validation(format!(
            "KL between supports of size {} and {}",
            q.len(),
            p.len()
        )));
    }
    let mut kl = 0.0;
    for (i, (&qi, &pi)) in q.probs().iter().zip(p.probs()).enumerate() {
        if qi == 0.0 {
            continue;
        }
        if pi == 0.0 {
            return Err(Error::domain(format!(
                "q is not absolutely continuous w.r.t. p: q[{i}] = {qi} but p[{i}] = 0"
            )));
        }
        kl += qi * ln(qi / pi);
    }
    Ok(kl.max(0.0))
}

/// Entropy of the joint table in nats.
pub fn joint_entropy(joint: &JointDistribution) -> f64 {
    entropy_nats(joint.table())
}

/// `I(X;T) = Σ p(x,t) ln[p(x,t) / (p(x) p(t))]` in nats.
pub fn mutual_information(joint: &JointDistribution) -> f64 {
    let px = joint.row_marginal();
    let pt = joint.col_marginal();
    let mut mi = 0.0;
    for r in 0..joint.rows() {
        for c in 0..joint.cols() {
            let pxt = joint.get(r, c);
            if pxt > 0.0 {
                mi += pxt * ln(pxt / (px.probs()[r] * pt.probs()[c]));
            }
        }
    }
    mi.max(0.0)
}

/// Information-bottleneck Lagrangian `I(X;T) − β I(T;Y)` in nats.
///
/// `joint_xt` has X on rows and T on columns; `joint_ty` has T on rows.
pub fn ib_objective(joint_xt: &JointDistribution, joint_ty: &JointDistribution, beta: f64) -> Result<f64> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::validation(format!("beta = {beta} must be >= 0")));
    }
    Ok(mutual_information(joint_xt) - beta * mutual_information(joint_ty))
}
