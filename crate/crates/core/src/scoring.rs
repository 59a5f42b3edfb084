//! Term weighting: BM25, Jelinek-Mercer smoothed query likelihood, TF-IDF
//! extraction weights and the statute-field compound score.
//!
//! BM25 and LM-JM follow the Lucene formulations:
//!
//! ```text
//! bm25  = ln(1 + (N - df + 0.5) / (df + 0.5)) * tf (k1 + 1) / (tf + k1 (1 - b + b len / avglen))
//! lm_jm = ln(1 + ((1 - λ) tf / len) / (λ ctf / total))
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Bm25Params {
    pub fn new(k1: f64, b: f64) -> Result<Self> {
        let p = Bm25Params { k1, b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k1 >= 0.0 && self.k1.is_finite()) {
            return Err(Error::Argument(format!("k1 must be >= 0, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::Argument(format!("b must be in [0, 1], got {}", self.b)));
        }
        Ok(())
    }
}

impl Default for Bm25Params {
    /// Lucene defaults.
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmParams {
    pub lambda: f64,
}

impl LmParams {
    pub fn new(lambda: f64) -> Result<Self> {
        let p = LmParams { lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::Argument(format!(
                "lambda must be in (0, 1), got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Body scorer with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scorer", rename_all = "snake_case")]
pub enum Scorer {
    Bm25(Bm25Params),
    LmJm(LmParams),
}

impl Scorer {
    pub fn validate(&self) -> Result<()> {
        match self {
            Scorer::Bm25(p) => p.validate(),
            Scorer::LmJm(p) => p.validate(),
        }
    }
}

/// Per-field statistics a scorer needs for one term in one unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermStats {
    pub tf: u32,
    pub df: u32,
    pub ctf: u64,
    pub unit_len: u32,
    pub units: u32,
    pub avg_len: f64,
    pub total_terms: u64,
}

/// BM25 contribution of one term. Returns 0 when `tf == 0`.
pub fn bm25_term(
    tf: u32,
    df: u32,
    units: u32,
    unit_len: u32,
    avg_len: f64,
    params: Bm25Params,
) -> Result<f64> {
    if tf == 0 {
        return Ok(0.0);
    }
    params.validate()?;
    if df == 0 || units == 0 || df > units || avg_len.is_nan() || avg_len <= 0.0 {
        return Err(Error::Argument(format!(
            "bm25 statistics out of range: df={df}, N={units}, avg_len={avg_len}"
        )));
    }
    Ok(bm25_term_unchecked(tf, df, units, unit_len, avg_len, params))
}

#[inline]
pub(crate) fn bm25_idf(df: u32, units: u32) -> f64 {
    let (n, df) = (units as f64, df as f64);
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

#[inline]
pub(crate) fn bm25_term_unchecked(
    tf: u32,
    df: u32,
    units: u32,
    unit_len: u32,
    avg_len: f64,
    params: Bm25Params,
) -> f64 {
    let tf = tf as f64;
    let norm = params.k1 * (1.0 - params.b + params.b * unit_len as f64 / avg_len);
    bm25_idf(df, units) * tf * (params.k1 + 1.0) / (tf + norm)
}

/// Jelinek-Mercer contribution of one term. Returns 0 when `tf == 0`.
pub fn lm_jm_term(tf: u32, unit_len: u32, ctf: u64, total_terms: u64, params: LmParams) -> Result<f64> {
    if tf == 0 {
        return Ok(0.0);
    }
    params.validate()?;
    if ctf == 0 {
        return Err(Error::Internal(
            "term occurs in a unit but has zero collection frequency".into(),
        ));
    }
    if unit_len == 0 || total_terms < ctf || (tf as u64) > ctf {
        return Err(Error::Argument(format!(
            "lm statistics out of range: tf={tf}, len={unit_len}, ctf={ctf}, total={total_terms}"
        )));
    }
    Ok(lm_jm_term_unchecked(tf, unit_len, ctf, total_terms, params))
}

#[inline]
pub(crate) fn lm_jm_term_unchecked(tf: u32, unit_len: u32, ctf: u64, total_terms: u64, params: LmParams) -> f64 {
    let doc = (1.0 - params.lambda) * tf as f64 / unit_len as f64;
    let coll = params.lambda * ctf as f64 / total_terms as f64;
    (1.0 + doc / coll).ln()
}

/// Raw tf times smoothed idf `ln((N + 1) / (df + 1))`.
pub fn tfidf_weight(tf_in_case: u32, df: u32, units: u32) -> f64 {
    if tf_in_case == 0 {
        return 0.0;
    }
    tf_in_case as f64 * ((units as f64 + 1.0) / (df as f64 + 1.0)).ln()
}

/// `s_body + s_statute * s_b`.
#[inline]
pub fn compound_score(s_body: f64, s_statute: f64, s_b: f64) -> f64 {
    s_body + s_statute * s_b
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldScore {
    pub s_body: f64,
    pub s_statute: f64,
    pub s_total: f64,
}

impl FieldScore {
    pub fn new(s_body: f64, s_statute: f64, s_b: f64) -> Self {
        FieldScore {
            s_body,
            s_statute,
            s_total: compound_score(s_body, s_statute, s_b),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const P: Bm25Params = Bm25Params { k1: 1.2, b: 0.75 };

    #[test]
    fn bm25_hand_value() {
        assert_eq!(bm25_term(0, 1, 2, 4, 4.0, P).unwrap(), 0.0);
        let s = bm25_term(2, 1, 2, 4, 4.0, P).unwrap();
        let expected = 2f64.ln() * (2.0 * 2.2) / (2.0 + 1.2);
        assert!((s - expected).abs() < 1e-12);
        assert!((s - 0.9530).abs() < 1e-4);
    }

    #[test]
    fn bm25_without_length_normalization() {
        let p = Bm25Params { k1: 1.2, b: 0.0 };
        let a = bm25_term(3, 2, 10, 5, 7.0, p).unwrap();
        let b = bm25_term(3, 2, 10, 50, 7.0, p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bm25_rejects_bad_stats() {
        assert!(bm25_term(1, 0, 2, 4, 4.0, P).is_err());
        assert!(bm25_term(1, 1, 2, 4, 0.0, P).is_err());
        assert!(bm25_term(1, 3, 2, 4, 1.0, P).is_err());
        assert!(bm25_term(1, 1, 2, 4, 1.0, Bm25Params { k1: 1.0, b: 1.5 }).is_err());
    }

    #[test]
    fn lm_hand_value() {
        let l = LmParams { lambda: 0.5 };
        assert_eq!(lm_jm_term(0, 2, 1, 4, l).unwrap(), 0.0);
        let s = lm_jm_term(1, 2, 1, 4, l).unwrap();
        assert!((s - 3f64.ln()).abs() < 1e-12);
        assert!((s - 1.0986).abs() < 1e-4);
    }

    #[test]
    fn lm_decreases_as_lambda_grows() {
        let lo = lm_jm_term(1, 2, 1, 4, LmParams { lambda: 0.5 }).unwrap();
        let hi = lm_jm_term(1, 2, 1, 4, LmParams { lambda: 0.99 }).unwrap();
        assert!(hi < lo && hi > 0.0);
    }

    #[test]
    fn lm_errors() {
        assert!(matches!(
            lm_jm_term(1, 2, 0, 4, LmParams { lambda: 0.5 }),
            Err(Error::Internal(_))
        ));
        assert!(lm_jm_term(1, 2, 1, 4, LmParams { lambda: 1.0 }).is_err());
        assert!(lm_jm_term(1, 2, 1, 4, LmParams { lambda: 0.0 }).is_err());
    }

    #[test]
    fn tfidf_values() {
        assert_eq!(tfidf_weight(0, 1, 100), 0.0);
        let w = tfidf_weight(3, 1, 100);
        assert!((w - 3.0 * (101.0f64 / 2.0).ln()).abs() < 1e-12);
        assert!((w - 11.766).abs() < 1e-3);
        assert_eq!(tfidf_weight(3, 100, 100), 0.0);
    }

    #[test]
    fn compound_values() {
        assert_eq!(compound_score(1.0, 2.0, 0.0), 1.0);
        assert_eq!(compound_score(1.0, 2.0, 0.5), 2.0);
        assert_eq!(compound_score(0.0, 3.0, 1.0), 3.0);
        let f = FieldScore::new(1.5, 2.0, 0.25);
        assert_eq!(f.s_total, 2.0);
    }

    proptest! {
        #[test]
        fn bm25_monotone(tf in 1u32..50, df in 1u32..50, extra in 1u32..100, len in 1u32..500,
                         k1 in 0.01f64..3.0, b in 0.0f64..=1.0) {
            let n = df + extra;
            let p = Bm25Params { k1, b };
            let base = bm25_term(tf, df, n, len, 100.0, p).unwrap();
            prop_assert!(bm25_term(tf + 1, df, n, len, 100.0, p).unwrap() > base);
            prop_assert!(bm25_term(tf, df + 1, n, len, 100.0, p).unwrap() < base);
        }

        #[test]
        fn lm_monotone(tf in 1u32..20, len in 20u32..200, ctf in 20u64..1000, lambda in 0.01f64..0.99) {
            let total = 100_000u64;
            let p = LmParams { lambda };
            let base = lm_jm_term(tf, len, ctf, total, p).unwrap();
            prop_assert!(base > 0.0);
            prop_assert!(lm_jm_term(tf + 1, len, ctf, total, p).unwrap() > base);
            prop_assert!(lm_jm_term(tf, len, ctf + 1, total, p).unwrap() < base);
        }

        #[test]
        fn zero_boost_is_exact(body in -1e6f64..1e6, statute in 0f64..1e6) {
            prop_assert_eq!(compound_score(body, statute, 0.0).to_bits(), body.to_bits());
        }
    }
}
