use std::f64::consts::PI;
use std::fmt;

use super::{Affine, Expr};

/// Prints an expression in the DSL accepted by [`super::parse`].
pub struct ExprDisplay<'a> {
    pub(super) expr: &'a Expr,
    pub(super) prefix: char,
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self.expr, self.prefix)
    }
}

/// Formats a constant in the shortest DSL form that parses back to the same bits.
///
/// Small multiples of `pi`, `sqrt(k)` and small rationals are recognised so
/// that `2.0943951023931953` prints as `2*pi/3`; anything else falls back to
/// the shortest round-trip decimal.
pub fn format_constant(value: f64) -> String {
    if value < 0.0 {
        return format!("-{}", format_magnitude(-value));
    }
    format_magnitude(value)
}

fn format_magnitude(v: f64) -> String {
    if v == v.trunc() && v < 1e15 {
        return format!("{}", v as i64);
    }
    match closed_form(v, 0.0) {
        Some((_, text)) => text,
        None => format!("{v:?}"),
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn close(candidate: f64, v: f64, tol: f64) -> bool {
    if tol == 0.0 {
        candidate == v
    } else {
        (candidate - v).abs() <= tol * v.max(1.0)
    }
}

/// Small rational, rational multiple of `pi` or of `sqrt(k)` within `tol` of
/// `v > 0`, as its exact double and DSL text.
fn closed_form(v: f64, tol: f64) -> Option<(f64, String)> {
    if !v.is_finite() || !(1e-6..1e6).contains(&v) {
        return None;
    }
    for q in 1..=16u32 {
        let qf = f64::from(q);
        let p = (v * qf).round();
        if (1.0..=1e6).contains(&p) && close(p / qf, v, tol) {
            let text = if q == 1 {
                format!("{}", p as i64)
            } else {
                format!("{}/{q}", p as i64)
            };
            return Some((p / qf, text));
        }
    }
    for q in 1..=12u32 {
        let qf = f64::from(q);
        for p in (1..=24u32).filter(|&p| gcd(p, q) == 1) {
            let pf = f64::from(p);
            let candidate = if p == 1 { PI / qf } else { pf * PI / qf };
            if close(candidate, v, tol) {
                let text = match (p, q) {
                    (1, 1) => "pi".to_string(),
                    (1, _) => format!("pi/{q}"),
                    (_, 1) => format!("{p}*pi"),
                    _ => format!("{p}*pi/{q}"),
                };
                return Some((candidate, text));
            }
        }
    }
    for k in [2u32, 3, 5, 6, 7] {
        let root = f64::from(k).sqrt();
        for q in 1..=12u32 {
            let qf = f64::from(q);
            for p in (1..=12u32).filter(|&p| gcd(p, q) == 1) {
                let candidate = if p == 1 { root / qf } else { f64::from(p) * root / qf };
                if close(candidate, v, tol) {
                    let head = if p == 1 {
                        format!("sqrt({k})")
                    } else {
                        format!("{p}*sqrt({k})")
                    };
                    let text = if q == 1 { head } else { format!("{head}/{q}") };
                    return Some((candidate, text));
                }
            }
        }
    }
    None
}

/// Replaces `v` by the nearest recognised closed form (or zero) within a
/// relative tolerance `tol`; other values are returned unchanged.
pub fn snap_constant(v: f64, tol: f64) -> f64 {
    if v.abs() <= tol {
        return 0.0;
    }
    match closed_form(v.abs(), tol) {
        Some((c, _)) => c.copysign(v),
        None => v,
    }
}

fn write_affine(f: &mut fmt::Formatter<'_>, a: &Affine, prefix: char) -> fmt::Result {
    let mut first = true;
    for &(var, c) in a.terms() {
        let name = format!("{prefix}{}", var + 1);
        let (sign, mag) = if c < 0.0 { ("-", -c) } else { ("+", c) };
        if first {
            if sign == "-" {
                write!(f, "-")?;
            }
        } else {
            write!(f, " {sign} ")?;
        }
        if mag == 1.0 {
            write!(f, "{name}")?;
        } else {
            write!(f, "{}*{name}", format_magnitude(mag))?;
        }
        first = false;
    }
    if first {
        return write!(f, "{}", format_constant(a.offset));
    }
    if a.offset != 0.0 {
        let sign = if a.offset < 0.0 { "-" } else { "+" };
        write!(f, " {sign} {}", format_magnitude(a.offset.abs()))?;
    }
    Ok(())
}

fn write_factor(f: &mut fmt::Formatter<'_>, e: &Expr, prefix: char) -> fmt::Result {
    match e {
        Expr::Sum(_) | Expr::Neg(_) => {
            write!(f, "(")?;
            write_expr(f, e, prefix)?;
            write!(f, ")")
        }
        _ => write_expr(f, e, prefix),
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr, prefix: char) -> fmt::Result {
    match e {
        Expr::Const(c) => write!(f, "{}", format_constant(*c)),
        Expr::Var(v) => write!(f, "{prefix}{}", v + 1),
        Expr::Sin(a) => {
            write!(f, "sin(")?;
            write_affine(f, a, prefix)?;
            write!(f, ")")
        }
        Expr::Cos(a) => {
            write!(f, "cos(")?;
            write_affine(f, a, prefix)?;
            write!(f, ")")
        }
        Expr::Sum(items) => {
            for (k, item) in items.iter().enumerate() {
                if k == 0 {
                    write_expr(f, item, prefix)?;
                    continue;
                }
                match item {
                    Expr::Neg(inner) => {
                        write!(f, " - ")?;
                        write_factor(f, inner, prefix)?;
                    }
                    Expr::Const(c) if *c < 0.0 => write!(f, " - {}", format_magnitude(-c))?,
                    Expr::Product(fs) if matches!(fs.first(), Some(Expr::Const(c)) if *c < 0.0) => {
                        write!(f, " - ")?;
                        let flipped = Expr::neg(item.clone());
                        write_expr(f, &flipped, prefix)?;
                    }
                    _ => {
                        write!(f, " + ")?;
                        write_expr(f, item, prefix)?;
                    }
                }
            }
            Ok(())
        }
        Expr::Product(items) => {
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    write!(f, "*")?;
                }
                write_factor(f, item, prefix)?;
            }
            Ok(())
        }
        Expr::Neg(inner) => {
            write!(f, "-")?;
            match **inner {
                Expr::Sum(_) | Expr::Product(_) => write_factor_paren(f, inner, prefix),
                _ => write_expr(f, inner, prefix),
            }
        }
    }
}

fn write_factor_paren(f: &mut fmt::Formatter<'_>, e: &Expr, prefix: char) -> fmt::Result {
    write!(f, "(")?;
    write_expr(f, e, prefix)?;
    write!(f, ")")
}
