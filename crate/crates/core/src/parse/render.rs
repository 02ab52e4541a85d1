//! Rendering in the input grammar and as LaTeX.

use num::{One, Signed};

use crate::expr::{Atom, DiffExpr, Monomial, Q};
use crate::problem::{jet_label, Variables};

fn atom_text(vars: &Variables, atom: &Atom) -> String {
    match atom {
        Atom::Indep(i) => vars.independents[*i].clone(),
        Atom::Jet(j) => jet_label(vars, j),
        Atom::Func(f) => {
            let mut s = f.def.name.clone();
            if f.deriv.iter().any(|&d| d > 0) {
                let marks: String = f
                    .deriv
                    .iter()
                    .enumerate()
                    .flat_map(|(k, &d)| {
                        std::iter::repeat_n(
                            char::from_digit(k as u32 + 1, 10).unwrap_or('?'),
                            d as usize,
                        )
                    })
                    .collect();
                s.push_str(&format!("_{{{marks}}}"));
            }
            let args: Vec<String> = f.args.iter().map(|a| render(vars, a)).collect();
            format!("{s}({})", args.join(", "))
        }
        Atom::Coeff(k) => format!("_c{k}"),
        Atom::Lambda => "lambda".into(),
        Atom::Slot(k) => format!("#{}", k + 1),
        Atom::SelfCall => "#self".into(),
    }
}

fn monomial_text(vars: &Variables, m: &Monomial) -> String {
    m.factors()
        .map(|(a, e)| {
            let base = atom_text(vars, a);
            match *e {
                1 => base,
                e if e < 0 => format!("{base}^({e})"),
                e => format!("{base}^{e}"),
            }
        })
        .collect::<Vec<_>>()
        .join("*")
}

fn coefficient_text(c: &Q) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("({}/{})", c.numer(), c.denom())
    }
}

/// Renders in the input grammar; `parse_expression` reads it back.
pub fn render(vars: &Variables, e: &DiffExpr) -> String {
    if e.is_empty() {
        return "0".into();
    }
    let mut out = String::new();
    for (k, (m, c)) in e.terms().enumerate() {
        let neg = c.is_negative();
        match (k, neg) {
            (0, true) => out.push('-'),
            (0, false) => {}
            (_, true) => out.push_str(" - "),
            (_, false) => out.push_str(" + "),
        }
        let mag = c.abs();
        if m.is_one() {
            out.push_str(&coefficient_text(&mag));
        } else if mag.is_one() {
            out.push_str(&monomial_text(vars, m));
        } else {
            out.push_str(&format!(
                "{}*{}",
                coefficient_text(&mag),
                monomial_text(vars, m)
            ));
        }
    }
    out
}

fn latex_atom(vars: &Variables, atom: &Atom) -> String {
    match atom {
        Atom::Indep(i) => vars.independents[*i].clone(),
        Atom::Jet(j) => jet_label(vars, j),
        Atom::Func(f) => {
            let order: u32 = f.deriv.iter().sum();
            let name = if order == 0 {
                f.def.name.clone()
            } else if f.deriv.len() == 1 && order <= 3 {
                format!("{}{}", f.def.name, "'".repeat(order as usize))
            } else if f.deriv.len() == 1 {
                format!("{}^{{({order})}}", f.def.name)
            } else {
                let marks: String = f
                    .deriv
                    .iter()
                    .enumerate()
                    .flat_map(|(k, &d)| std::iter::repeat_n((k + 1).to_string(), d as usize))
                    .collect();
                format!("{}_{{{marks}}}", f.def.name)
            };
            let args: Vec<String> = f.args.iter().map(|a| latex(vars, a)).collect();
            format!("{name}\\left({}\\right)", args.join(", "))
        }
        Atom::Coeff(k) => format!("c_{{{k}}}"),
        Atom::Lambda => "\\lambda".into(),
        Atom::Slot(k) => format!("\\#{}", k + 1),
        Atom::SelfCall => "\\mathrm{self}".into(),
    }
}

/// LaTeX rendering, e.g. `\tfrac{1}{2}u^{2}`.
pub fn latex(vars: &Variables, e: &DiffExpr) -> String {
    if e.is_empty() {
        return "0".into();
    }
    let mut out = String::new();
    for (k, (m, c)) in e.terms().enumerate() {
        let neg = c.is_negative();
        match (k, neg) {
            (0, true) => out.push('-'),
            (0, false) => {}
            (_, true) => out.push_str(" - "),
            (_, false) => out.push_str(" + "),
        }
        let mag = c.abs();
        let coeff = if mag.is_integer() {
            mag.numer().to_string()
        } else {
            format!("\\tfrac{{{}}}{{{}}}", mag.numer(), mag.denom())
        };
        let body = m
            .factors()
            .map(|(a, e)| {
                let base = latex_atom(vars, a);
                if *e == 1 {
                    base
                } else {
                    format!("{base}^{{{e}}}")
                }
            })
            .collect::<Vec<_>>()
            .join(" ");
        if m.is_one() {
            out.push_str(&coeff);
        } else if mag.is_one() {
            out.push_str(&body);
        } else {
            out.push_str(&coeff);
            out.push_str(&body);
        }
    }
    out
}
