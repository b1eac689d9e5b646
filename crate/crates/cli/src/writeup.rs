//! Methods paragraph for a nested mixed-model comparison.

use std::collections::BTreeMap;

use lmkit_core::inference::LrtResult;
use lmkit_core::lmm::LmmFit;

#[derive(Debug, Clone, Default)]
pub struct WriteupOptions {
    /// Grouping factor → display noun (`scenario` → `item`).
    pub aliases: BTreeMap<String, String>,
    /// Variable → display name (`attitude` → `politeness`).
    pub names: BTreeMap<String, String>,
    pub unit: Option<String>,
}

impl WriteupOptions {
    fn name<'a>(&'a self, var: &'a str) -> &'a str {
        self.names.get(var).map_or(var, String::as_str)
    }

    fn alias<'a>(&'a self, grouping: &'a str) -> &'a str {
        self.aliases.get(grouping).map_or(grouping, String::as_str)
    }
}

/// `a`, `a and b`, `a, b and c`.
fn join_and<S: AsRef<str>>(items: &[S]) -> String {
    match items {
        [] => String::new(),
        [a] => a.as_ref().to_string(),
        [rest @ .., last] => format!(
            "{} and {}",
            rest.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(", "),
            last.as_ref()
        ),
    }
}

fn plural(noun: &str) -> String {
    if noun.ends_with('s') {
        noun.to_string()
    } else {
        format!("{noun}s")
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// At least `digits` significant digits, never in exponent form.
pub fn significant(v: f64, digits: i32) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let decimals = (digits - 1 - v.abs().log10().floor() as i32).max(0) as usize;
    format!("{v:.decimals$}")
}

fn format_p(p: f64) -> String {
    if p < 1e-10 {
        "p<1e-10".into()
    } else {
        format!("p={}", significant(p, 2))
    }
}

/// The variable(s) behind a coefficient label such as `attitudepol` or
/// `attitudepol:genderM`.
fn effect_vars(fit: &LmmFit, label: &str) -> Vec<String> {
    let vars = fit.frame.formula.fixed_vars();
    label
        .split(':')
        .map(|part| {
            vars.iter()
                .filter(|v| part.starts_with(**v))
                .max_by_key(|v| v.len())
                .map_or(part.to_string(), |v| v.to_string())
        })
        .collect()
}

/// Errors when `effect_label` is not a fixed effect of `full`.
pub fn writeup_generate(
    full: &LmmFit,
    lrt: &LrtResult,
    effect_label: &str,
    opts: &WriteupOptions,
) -> Result<String, String> {
    let effect = full
        .fixed_effect(effect_label)
        .ok_or_else(|| format!("`{effect_label}` is not a fixed effect of the full model"))?;
    let ast = &full.frame.formula;
    let response = opts.name(&full.frame.response).to_string();
    let effect_name = effect_vars(full, effect_label)
        .iter()
        .map(|v| opts.name(v).to_string())
        .collect::<Vec<_>>()
        .join(" by ");

    let mut main = Vec::new();
    let mut interactions = false;
    for t in &ast.fixed_terms {
        match t.order() {
            0 => {}
            1 => main.push(opts.name(&t.vars()[0]).to_string()),
            _ => interactions = true,
        }
    }
    let mut text = format!(
        "A linear mixed-effects analysis of {response} was carried out with lmkit, estimating variance components by restricted maximum likelihood."
    );
    if main.is_empty() {
        text.push_str(" The fixed part of the model contained only an intercept.");
    } else {
        let note = match (main.len(), interactions) {
            (1, _) => "",
            (_, true) => ", together with their interaction",
            (_, false) => ", with no interaction term",
        };
        text.push_str(&format!(" The fixed effects were {}{note}.", join_and(&main)));
    }

    let groupings: Vec<String> = ast.random_specs.iter().map(|s| plural(opts.alias(&s.grouping))).collect();
    text.push_str(&format!(" The random effects were intercepts for {}", join_and(&groupings)));
    let sloped: Vec<_> = ast.random_specs.iter().filter(|s| s.has_slopes()).collect();
    if !sloped.is_empty() {
        let by: Vec<String> = sloped.iter().map(|s| format!("by-{}", opts.alias(&s.grouping))).collect();
        let mut slope_vars: Vec<&str> = Vec::new();
        for v in sloped.iter().flat_map(|s| s.slope_vars()) {
            if !slope_vars.contains(&v) {
                slope_vars.push(v);
            }
        }
        let names: Vec<&str> = slope_vars.iter().map(|v| opts.name(v)).collect();
        text.push_str(&format!(
            ", as well as {} random slopes for the effect of {}",
            join_and(&by),
            join_and(&names)
        ));
    }
    text.push('.');
    text.push_str(" Residual plots were checked for unequal variance and for departures from normality.");
    text.push_str(&format!(
        " The p-value comes from a likelihood ratio test of the full model against a reduced model without {effect_name}, both fitted by maximum likelihood."
    ));
    let direction = if effect.estimate < 0.0 { "lowering" } else { "raising" };
    let unit = opts.unit.as_deref().map_or(String::new(), |u| format!(" {u}"));
    text.push_str(&format!(
        " {} affected {response} (χ2({})={:.2}, {}), {direction} it by about {}{unit} ± {} (standard errors).",
        capitalize(&effect_name),
        lrt.chi_df,
        lrt.chisq,
        format_p(lrt.p_value),
        significant(effect.estimate.abs(), 3),
        significant(effect.std_error, 2),
    ));
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_and_lists() {
        assert_eq!(significant(19.72111, 3), "19.7");
        assert_eq!(significant(5.584, 2), "5.6");
        assert_eq!(significant(0.0006532, 2), "0.00065");
        assert_eq!(significant(0.53, 2), "0.53");
        assert_eq!(significant(123.4, 2), "123");
        assert_eq!(join_and(&["a", "b", "c"]), "a, b and c");
        assert_eq!(join_and(&["subjects", "items"]), "subjects and items");
        assert_eq!(plural("subject"), "subjects");
    }
}
