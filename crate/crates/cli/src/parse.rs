use riskconv::norms::{OrliczFunction, RiNorm};
use riskconv::prob::{FiniteSpace, RandomVariable};
use riskconv::risk::{es_alpha, neg_expectation, var_alpha, Entropic, ExpectedShortfall, NegExpectation, RiskMeasure, ValueAtRisk};
use riskconv::scalar::{parse_rational, Rational, Scalar};
use riskconv::{Error, Result};

/// A measure as written on the command line, before a backend is chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum MeasureChoice {
    Es(String),
    Var(String),
    Entropic(f64),
    NegExpectation,
}

impl MeasureChoice {
    /// Parses `es:0.3`, `var:0.1`, `entropic:2` or `neg_expectation`. A bare
    /// `es`, `var` or `entropic` takes its parameter from `alpha` or `gamma`.
    pub fn parse(text: &str, alpha: Option<&str>, gamma: Option<f64>) -> Result<Self> {
        let (head, param) = match text.split_once(':') {
            Some((h, p)) => (h.trim(), Some(p.trim())),
            None => (text.trim(), None),
        };
        let need = |what: &str| Error::InvalidArgument(format!("measure '{head}' needs a {what}"));
        match head {
            "es" | "cvar" => Ok(MeasureChoice::Es(param.or(alpha).ok_or_else(|| need("level"))?.to_string())),
            "var" => Ok(MeasureChoice::Var(param.or(alpha).ok_or_else(|| need("level"))?.to_string())),
            "entropic" => {
                let g = match param {
                    Some(p) => p.parse().map_err(|_| Error::InvalidArgument(format!("bad gamma {p:?}")))?,
                    None => gamma.ok_or_else(|| need("gamma"))?,
                };
                Ok(MeasureChoice::Entropic(g))
            }
            "neg_expectation" | "mean" => Ok(MeasureChoice::NegExpectation),
            other => Err(Error::InvalidArgument(format!("unknown measure '{other}'"))),
        }
    }

    pub fn parse_list(text: &str) -> Result<Vec<Self>> {
        text.split(',').filter(|s| !s.trim().is_empty()).map(|s| Self::parse(s, None, None)).collect()
    }

    pub fn build(&self) -> Result<Box<dyn RiskMeasure>> {
        Ok(match self {
            MeasureChoice::Es(a) => Box::new(ExpectedShortfall::new(level(a)?)?),
            MeasureChoice::Var(a) => Box::new(ValueAtRisk::new(level(a)?)?),
            MeasureChoice::Entropic(g) => Box::new(Entropic::new(*g)?),
            MeasureChoice::NegExpectation => Box::new(NegExpectation),
        })
    }

    pub fn eval_exact(&self, x: &RandomVariable<Rational>) -> Result<Rational> {
        match self {
            MeasureChoice::Es(a) => es_alpha(x, &parse_rational(a)?),
            MeasureChoice::Var(a) => var_alpha(x, &parse_rational(a)?),
            MeasureChoice::NegExpectation => Ok(neg_expectation(x)),
            MeasureChoice::Entropic(_) => Err(Error::Unsupported("the entropic measure has no exact rational value".into())),
        }
    }
}

fn level(text: &str) -> Result<f64> {
    Ok(parse_rational(text)?.to_f64_lossy())
}

/// `l1`, `l1.5`, `l2`, `linf` or `exp` (Luxemburg norm of `e^t - 1`).
pub fn parse_norm(text: &str) -> Result<RiNorm> {
    let t = text.trim().to_ascii_lowercase();
    match t.as_str() {
        "linf" | "inf" => Ok(RiNorm::LInf),
        "exp" | "orlicz:exp" => Ok(RiNorm::Orlicz(OrliczFunction::exponential())),
        "square" | "orlicz:square" => Ok(RiNorm::Orlicz(OrliczFunction::square())),
        _ => match t.strip_prefix('l').map(str::parse::<f64>) {
            Some(Ok(p)) => RiNorm::lp(p),
            _ => Err(Error::InvalidArgument(format!("unknown norm '{text}'"))),
        },
    }
}

pub fn parse_norms(text: &str) -> Result<Vec<RiNorm>> {
    text.split(',').filter(|s| !s.trim().is_empty()).map(parse_norm).collect()
}

/// `w:c` pairs describing flat budgets `{Y >= 0 : E[w Y] <= c}`.
pub fn parse_budgets(text: &str) -> Result<Vec<(Rational, Rational)>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let (w, c) = item
                .split_once(':')
                .ok_or_else(|| Error::InvalidArgument(format!("budget {item:?} is not of the form w:c")))?;
            Ok((parse_rational(w)?, parse_rational(c)?))
        })
        .collect()
}

/// `X = (-4, -2, 1, 3)` on four equally likely atoms.
pub fn default_fixture<T: Scalar>() -> Result<RandomVariable<T>> {
    RandomVariable::from_f64s(FiniteSpace::uniform(4)?, &[-4.0, -2.0, 1.0, 3.0])
}
