//! Cosine nearest neighbors and element-wise vector arithmetic over rows.

use serde::Serialize;

use super::AnalysisError;
use crate::store::CorpusMatrix;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Neighbor {
    pub id: String,
    pub row: usize,
    pub similarity: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb)
}

/// The `k` rows most cosine-similar to `query`, best first; ties go to the
/// smaller row id. Rows for which `exclude` holds are skipped before
/// truncation. Zero rows have similarity 0.
pub fn cosine_knn(
    m: &CorpusMatrix,
    query: &[f64],
    k: usize,
    exclude: impl Fn(usize) -> bool,
) -> Result<Vec<Neighbor>, AnalysisError> {
    if query.len() != m.n_features() {
        return Err(AnalysisError::SchemaMismatch { expected: m.n_features(), got: query.len() });
    }
    if k == 0 {
        return Err(AnalysisError::Invalid("k must be at least 1".into()));
    }
    let qn = norm(query);
    if qn == 0.0 || !qn.is_finite() {
        return Err(AnalysisError::ZeroVector);
    }
    let mut hits: Vec<Neighbor> = (0..m.n_rows())
        .filter(|&i| !exclude(i))
        .map(|i| {
            let row = m.row(i);
            let rn = norm(row);
            let similarity =
                if rn == 0.0 { 0.0 } else { row.iter().zip(query).map(|(x, y)| x * y).sum::<f64>() / (rn * qn) };
            Neighbor { id: m.ids[i].clone(), row: i, similarity }
        })
        .collect();
    hits.sort_by(|a, b| b.similarity.total_cmp(&a.similarity).then_with(|| a.id.cmp(&b.id)));
    hits.truncate(k);
    Ok(hits)
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Scalar(f64),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Name(String),
    Op(char),
}

fn tokenize(s: &str) -> Result<Vec<Token>, AnalysisError> {
    let mut out = Vec::new();
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if "+-*()=,".contains(c) {
            out.push(Token::Op(c));
            i += 1;
        } else if c == '"' {
            let end = chars[i + 1..]
                .iter()
                .position(|&ch| ch == '"')
                .ok_or_else(|| AnalysisError::Expression("unterminated quote".into()))?;
            out.push(Token::Name(chars[i + 1..i + 1 + end].iter().collect()));
            i += end + 2;
        } else {
            let start = i;
            while i < chars.len() && !chars[i].is_whitespace() && !"+-*()=,\"".contains(chars[i]) {
                i += 1;
            }
            // scientific notation such as 1e-3 continues through the sign
            while i + 1 < chars.len()
                && "+-".contains(chars[i])
                && chars[i - 1].eq_ignore_ascii_case(&'e')
                && chars[start..i - 1].iter().all(|c| c.is_ascii_digit() || *c == '.')
            {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            let word: String = chars[start..i].iter().collect();
            match word.parse::<f64>() {
                Ok(v) if word.starts_with(|c: char| c.is_ascii_digit() || c == '.') => out.push(Token::Num(v)),
                _ => out.push(Token::Name(word)),
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    m: &'a CorpusMatrix,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn expect(&mut self, c: char) -> Result<(), AnalysisError> {
        match self.tokens.get(self.pos) {
            Some(Token::Op(o)) if *o == c => {
                self.pos += 1;
                Ok(())
            }
            other => Err(AnalysisError::Expression(format!("expected `{c}`, found {other:?}"))),
        }
    }

    fn name(&mut self) -> Result<String, AnalysisError> {
        match self.tokens.get(self.pos).cloned() {
            Some(Token::Name(n)) => {
                self.pos += 1;
                Ok(n)
            }
            Some(Token::Num(v)) => {
                self.pos += 1;
                Ok(format!("{v}"))
            }
            other => Err(AnalysisError::Expression(format!("expected a name, found {other:?}"))),
        }
    }

    fn expr(&mut self) -> Result<Value, AnalysisError> {
        let mut acc = self.term()?;
        while let Some(Token::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            acc = combine(acc, rhs, |a, b| if op == '+' { a + b } else { a - b });
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Value, AnalysisError> {
        let mut acc = self.factor()?;
        while let Some(Token::Op('*')) = self.peek() {
            self.pos += 1;
            let rhs = self.factor()?;
            acc = combine(acc, rhs, |a, b| a * b);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Value, AnalysisError> {
        match self.tokens.get(self.pos).cloned() {
            Some(Token::Num(v)) => {
                self.pos += 1;
                Ok(Value::Scalar(v))
            }
            Some(Token::Op('-')) => {
                self.pos += 1;
                let v = self.factor()?;
                Ok(combine(Value::Scalar(-1.0), v, |a, b| a * b))
            }
            Some(Token::Op('(')) => {
                self.pos += 1;
                let v = self.expr()?;
                self.expect(')')?;
                Ok(v)
            }
            Some(Token::Name(n)) if n == "mean" && self.tokens.get(self.pos + 1) == Some(&Token::Op('(')) => {
                self.pos += 2;
                let rows: Vec<usize> = if let Some(Token::Op(')')) = self.peek() {
                    (0..self.m.n_rows()).collect()
                } else {
                    let key = self.name()?;
                    self.expect('=')?;
                    let value = self.name()?;
                    (0..self.m.n_rows()).filter(|&i| self.m.meta_value(i, &key) == Some(value.as_str())).collect()
                };
                self.expect(')')?;
                if rows.is_empty() {
                    return Err(AnalysisError::Expression("mean(...) selects no rows".into()));
                }
                let mut acc = vec![0.0; self.m.n_features()];
                for &i in &rows {
                    for (a, x) in acc.iter_mut().zip(self.m.row(i)) {
                        *a += x;
                    }
                }
                acc.iter_mut().for_each(|a| *a /= rows.len() as f64);
                Ok(Value::Vector(acc))
            }
            Some(Token::Name(n)) => {
                self.pos += 1;
                let i = self.m.row_index(&n)?;
                Ok(Value::Vector(self.m.row(i).to_vec()))
            }
            other => Err(AnalysisError::Expression(format!("unexpected {other:?}"))),
        }
    }
}

fn combine(a: Value, b: Value, f: impl Fn(f64, f64) -> f64) -> Value {
    match (a, b) {
        (Value::Scalar(x), Value::Scalar(y)) => Value::Scalar(f(x, y)),
        (Value::Vector(v), Value::Scalar(y)) => Value::Vector(v.into_iter().map(|x| f(x, y)).collect()),
        (Value::Scalar(x), Value::Vector(v)) => Value::Vector(v.into_iter().map(|y| f(x, y)).collect()),
        (Value::Vector(v), Value::Vector(w)) => Value::Vector(v.into_iter().zip(w).map(|(x, y)| f(x, y)).collect()),
    }
}

/// Evaluates an element-wise expression over rows of `m`.
///
/// Operands are row ids (quote ids containing operators), numbers (broadcast)
/// and `mean(key=value)` / `mean()` aggregates over metadata groups.
/// Operators are `+`, `-`, `*` and parentheses, e.g.
/// `"img 4" + img6` or `mondrian * mean(genre=landscape)`.
pub fn vector_arith(m: &CorpusMatrix, expr: &str) -> Result<Vec<f64>, AnalysisError> {
    let tokens = tokenize(expr)?;
    if tokens.is_empty() {
        return Err(AnalysisError::Expression("empty expression".into()));
    }
    let mut p = Parser { tokens, pos: 0, m };
    let v = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(AnalysisError::Expression(format!("trailing input at token {}", p.pos)));
    }
    match v {
        Value::Vector(v) => Ok(v),
        Value::Scalar(_) => Err(AnalysisError::Expression("expression has no vector operand".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use std::collections::BTreeMap;

    fn fixture(n: usize, d: usize, seed: u64) -> CorpusMatrix {
        let mut r = super::super::rng(seed);
        let mut m = CorpusMatrix::new((0..d).map(|j| format!("f{j}")).collect(), "h".into());
        for i in 0..n {
            let meta = BTreeMap::from([("artist".to_string(), format!("a{}", i % 3))]);
            let row: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
            m.push_row(format!("r{i:03}"), meta, &row);
        }
        m
    }

    #[test]
    fn existing_row_is_its_own_nearest() {
        let m = fixture(10, 4, 1);
        let q = m.row(3).to_vec();
        let hits = cosine_knn(&m, &q, 3, |_| false).unwrap();
        assert_eq!(hits[0].id, "r003");
        assert!((hits[0].similarity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matches_brute_force_ranking() {
        let m = fixture(10, 5, 2);
        let q = m.row(7).to_vec();
        let hits = cosine_knn(&m, &q, 10, |_| false).unwrap();
        let mut brute: Vec<(f64, String)> =
            (0..10).map(|i| (cosine(m.row(i), &q), m.ids[i].clone())).collect();
        brute.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let got: Vec<&str> = hits.iter().map(|h| h.id.as_str()).collect();
        let want: Vec<&str> = brute.iter().map(|b| b.1.as_str()).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn exclusion_applies_before_truncation() {
        let m = fixture(12, 3, 3);
        let q = m.row(0).to_vec();
        let hits = cosine_knn(&m, &q, 5, |i| m.meta_value(i, "artist") == Some("a0")).unwrap();
        assert_eq!(hits.len(), 5);
        assert!(hits.iter().all(|h| m.meta_value(h.row, "artist") != Some("a0")));
    }

    #[test]
    fn zero_query_and_wrong_length_fail() {
        let m = fixture(4, 3, 4);
        assert!(matches!(cosine_knn(&m, &[0.0; 3], 1, |_| false), Err(AnalysisError::ZeroVector)));
        assert!(matches!(cosine_knn(&m, &[1.0; 2], 1, |_| false), Err(AnalysisError::SchemaMismatch { .. })));
    }

    #[test]
    fn arithmetic_forms() {
        let m = fixture(6, 3, 5);
        assert_eq!(vector_arith(&m, "r001 + 0").unwrap(), m.row(1));
        let doubled = vector_arith(&m, "r001 + r001").unwrap();
        assert!(doubled.iter().zip(m.row(1)).all(|(a, b)| (a - 2.0 * b).abs() < 1e-15));
        let v = vector_arith(&m, "(r000 - r002) * 2").unwrap();
        assert!((v[1] - 2.0 * (m.get(0, 1) - m.get(2, 1))).abs() < 1e-15);
        let mean = vector_arith(&m, "mean(artist=a1)").unwrap();
        assert!((mean[0] - (m.get(1, 0) + m.get(4, 0)) / 2.0).abs() < 1e-15);
        assert!((vector_arith(&m, "r000 * 1e-3").unwrap()[0] - m.get(0, 0) * 1e-3).abs() < 1e-18);
        assert!(vector_arith(&m, "2 + 3").is_err());
        assert!(vector_arith(&m, "nope").is_err());
        assert!(vector_arith(&m, "r000 +").is_err());
    }

    #[test]
    fn cluster_mean_finds_cluster_members() {
        let mut m = fixture(20, 6, 6);
        let centre = [3.0, -2.0, 1.0, 0.5, 4.0, -1.0];
        for i in 0..5 {
            let row: Vec<f64> = centre.iter().map(|c| c + 0.01 * i as f64).collect();
            let meta = BTreeMap::from([("set".to_string(), "dup".to_string())]);
            m.push_row(format!("d{i}"), meta, &row);
        }
        let q = vector_arith(&m, "mean(set=dup)").unwrap();
        let hits = cosine_knn(&m, &q, 5, |_| false).unwrap();
        assert!(hits.iter().all(|h| h.id.starts_with('d')));
    }

    proptest::proptest! {
        #[test]
        fn ranking_is_scale_invariant(alpha in 0.001f64..1000.0, row in 0usize..15) {
            let m = fixture(15, 4, 8);
            let q = m.row(row).to_vec();
            let scaled: Vec<f64> = q.iter().map(|x| x * alpha).collect();
            let a: Vec<usize> = cosine_knn(&m, &q, 15, |_| false).unwrap().iter().map(|h| h.row).collect();
            let b: Vec<usize> = cosine_knn(&m, &scaled, 15, |_| false).unwrap().iter().map(|h| h.row).collect();
            proptest::prop_assert_eq!(a, b);
        }
    }
}
