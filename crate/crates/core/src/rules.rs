//! Base-model abstraction and rule-based classifiers.
//!
//! Two ways to obtain a rule model: parse a fixed rule set from text, or
//! learn one with a greedy sequential-covering procedure. Rule files use
//! the grammar
//!
//! ```text
//! IF <cond> [AND <cond>]* [OR <cond> [AND <cond>]*]* THEN <label> ELSE <label>
//! ```
//!
//! with `<cond> := <feature> (<=|>=) <number>` and OR binding looser than
//! AND. A rule set with no conditions (possible output of the learner) is
//! written as the degenerate form `ALWAYS <label>`. Lines starting with
//! `#` are comments.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::error::{Error, Result};

/// A black-box binary classifier. Implementations must be deterministic:
/// the same input always yields the same output. `x` must match the
/// schema the model was built against.
pub trait BaseModel {
    fn predict(&self, x: &[f64]) -> u8;
}

/// Comparison operator allowed in rule conditions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RuleOp {
    Le,
    Ge,
}

impl RuleOp {
    fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            RuleOp::Le => value <= threshold,
            RuleOp::Ge => value >= threshold,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            RuleOp::Le => "<=",
            RuleOp::Ge => ">=",
        }
    }
}

/// Atomic condition on a single named feature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub feature: String,
    pub op: RuleOp,
    pub threshold: f64,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.feature, self.op.as_str(), self.threshold)
    }
}

/// Conjunction of conditions; fires only when every condition holds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conjunction {
    pub conditions: Vec<Condition>,
}

/// Ordered disjunction of conjunctions with a default label. Predicts
/// `positive_label` when any conjunction fires, `default_label` otherwise;
/// conjunction order never changes the outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleModel {
    pub rules: Vec<Conjunction>,
    pub positive_label: u8,
    pub default_label: u8,
}

impl RuleModel {
    /// Every feature name referenced by some condition.
    pub fn referenced_features(&self) -> BTreeSet<&str> {
        self.rules
            .iter()
            .flat_map(|c| c.conditions.iter())
            .map(|c| c.feature.as_str())
            .collect()
    }

    /// Resolve feature names against a dataset schema, producing a
    /// predictor over feature vectors in that schema's column order.
    pub fn bind(&self, feature_names: &[String]) -> Result<BoundRuleModel> {
        if self.positive_label > 1 || self.default_label > 1 {
            return Err(Error::InvalidRule("labels must be 0 or 1".to_string()));
        }
        let mut rules = Vec::with_capacity(self.rules.len());
        for conj in &self.rules {
            if conj.conditions.is_empty() {
                return Err(Error::InvalidRule("empty conjunction".to_string()));
            }
            let mut bound = Vec::with_capacity(conj.conditions.len());
            for cond in &conj.conditions {
                let idx = feature_names
                    .iter()
                    .position(|n| n == &cond.feature)
                    .ok_or_else(|| Error::UnknownFeature(cond.feature.clone()))?;
                bound.push(BoundCondition {
                    index: idx,
                    op: cond.op,
                    threshold: cond.threshold,
                });
            }
            rules.push(bound);
        }
        Ok(BoundRuleModel {
            rules,
            positive_label: self.positive_label,
            default_label: self.default_label,
            dim: feature_names.len(),
        })
    }
}

impl fmt::Display for RuleModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rules.is_empty() {
            return write!(f, "ALWAYS {}", self.default_label);
        }
        write!(f, "IF ")?;
        for (i, conj) in self.rules.iter().enumerate() {
            if i > 0 {
                write!(f, " OR ")?;
            }
            for (j, cond) in conj.conditions.iter().enumerate() {
                if j > 0 {
                    write!(f, " AND ")?;
                }
                write!(f, "{cond}")?;
            }
        }
        write!(f, " THEN {} ELSE {}", self.positive_label, self.default_label)
    }
}

#[derive(Clone, Copy, Debug)]
struct BoundCondition {
    index: usize,
    op: RuleOp,
    threshold: f64,
}

/// A rule model resolved against a concrete feature schema.
#[derive(Clone, Debug)]
pub struct BoundRuleModel {
    rules: Vec<Vec<BoundCondition>>,
    positive_label: u8,
    default_label: u8,
    dim: usize,
}

impl BoundRuleModel {
    pub fn input_dim(&self) -> usize {
        self.dim
    }
}

impl BaseModel for BoundRuleModel {
    fn predict(&self, x: &[f64]) -> u8 {
        assert_eq!(
            x.len(),
            self.dim,
            "rule model bound to {} features, got {}",
            self.dim,
            x.len()
        );
        for conj in &self.rules {
            if conj.iter().all(|c| c.op.holds(x[c.index], c.threshold)) {
                return self.positive_label;
            }
        }
        self.default_label
    }
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Clone, Debug, PartialEq)]
enum TokKind {
    If,
    And,
    Or,
    Then,
    Else,
    Always,
    Ident(String),
    Num(f64),
    Le,
    Ge,
}

#[derive(Clone, Debug)]
struct Tok {
    kind: TokKind,
    line: usize,
    col: usize,
}

fn syntax_err(line: usize, col: usize, message: impl Into<String>) -> Error {
    Error::RuleSyntax {
        line,
        column: col,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Tok>> {
    let mut toks = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line_no = line_no + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c == '#' {
                break; // comment to end of line
            }
            if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                let kind = match word.as_str() {
                    "IF" => TokKind::If,
                    "AND" => TokKind::And,
                    "OR" => TokKind::Or,
                    "THEN" => TokKind::Then,
                    "ELSE" => TokKind::Else,
                    "ALWAYS" => TokKind::Always,
                    _ => TokKind::Ident(word),
                };
                toks.push(Tok {
                    kind,
                    line: line_no,
                    col,
                });
                continue;
            }
            if c == '<' || c == '>' {
                if i + 1 < chars.len() && chars[i + 1] == '=' {
                    toks.push(Tok {
                        kind: if c == '<' { TokKind::Le } else { TokKind::Ge },
                        line: line_no,
                        col,
                    });
                    i += 2;
                    continue;
                }
                return Err(syntax_err(
                    line_no,
                    col,
                    format!("expected '<=' or '>=', found bare '{c}'"),
                ));
            }
            if c.is_ascii_digit() || c == '-' || c == '.' {
                let start = i;
                i += 1;
                while i < chars.len() {
                    let d = chars[i];
                    let exp_sign = (d == '+' || d == '-')
                        && matches!(chars[i - 1], 'e' | 'E');
                    if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                        i += 1;
                    } else {
                        break;
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let value: f64 = text
                    .parse()
                    .map_err(|_| syntax_err(line_no, col, format!("invalid number '{text}'")))?;
                toks.push(Tok {
                    kind: TokKind::Num(value),
                    line: line_no,
                    col,
                });
                continue;
            }
            return Err(syntax_err(line_no, col, format!("unexpected character '{c}'")));
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&TokKind> {
        self.toks.get(self.pos).map(|t| &t.kind)
    }

    fn here(&self) -> (usize, usize) {
        match self.toks.get(self.pos) {
            Some(t) => (t.line, t.col),
            None => self
                .toks
                .last()
                .map(|t| (t.line, t.col + 1))
                .unwrap_or((1, 1)),
        }
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, kind: &TokKind, what: &str) -> Result<()> {
        let (line, col) = self.here();
        match self.bump() {
            Some(t) if &t.kind == kind => Ok(()),
            Some(t) => Err(syntax_err(
                t.line,
                t.col,
                format!("expected {what}, found {:?}", t.kind),
            )),
            None => Err(syntax_err(line, col, format!("expected {what}, found end of input"))),
        }
    }

    fn label(&mut self) -> Result<u8> {
        let (line, col) = self.here();
        match self.bump() {
            Some(Tok {
                kind: TokKind::Num(v),
                line,
                col,
            }) => {
                if v == 0.0 {
                    Ok(0)
                } else if v == 1.0 {
                    Ok(1)
                } else {
                    Err(syntax_err(line, col, format!("label must be 0 or 1, found {v}")))
                }
            }
            Some(t) => Err(syntax_err(
                t.line,
                t.col,
                format!("expected label 0 or 1, found {:?}", t.kind),
            )),
            None => Err(syntax_err(line, col, "expected label 0 or 1, found end of input")),
        }
    }

    fn condition(&mut self) -> Result<Condition> {
        let (line, col) = self.here();
        let feature = match self.bump() {
            Some(Tok {
                kind: TokKind::Ident(name),
                ..
            }) => name,
            Some(t) => {
                return Err(syntax_err(
                    t.line,
                    t.col,
                    format!("expected feature name, found {:?}", t.kind),
                ))
            }
            None => return Err(syntax_err(line, col, "expected feature name, found end of input")),
        };
        let (line, col) = self.here();
        let op = match self.bump() {
            Some(Tok {
                kind: TokKind::Le, ..
            }) => RuleOp::Le,
            Some(Tok {
                kind: TokKind::Ge, ..
            }) => RuleOp::Ge,
            Some(t) => {
                return Err(syntax_err(
                    t.line,
                    t.col,
                    format!("expected '<=' or '>=', found {:?}", t.kind),
                ))
            }
            None => return Err(syntax_err(line, col, "expected '<=' or '>=', found end of input")),
        };
        let (line, col) = self.here();
        let threshold = match self.bump() {
            Some(Tok {
                kind: TokKind::Num(v),
                ..
            }) => v,
            Some(t) => {
                return Err(syntax_err(
                    t.line,
                    t.col,
                    format!("expected number, found {:?}", t.kind),
                ))
            }
            None => return Err(syntax_err(line, col, "expected number, found end of input")),
        };
        Ok(Condition {
            feature,
            op,
            threshold,
        })
    }

    fn conjunction(&mut self) -> Result<Conjunction> {
        let mut conditions = vec![self.condition()?];
        while self.peek() == Some(&TokKind::And) {
            self.bump();
            conditions.push(self.condition()?);
        }
        Ok(Conjunction { conditions })
    }
}

/// Parse a rule set from text. Serializing the result reproduces a
/// semantically identical rule set.
pub fn parse_rules(text: &str) -> Result<RuleModel> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };

    if p.peek() == Some(&TokKind::Always) {
        p.bump();
        let label = p.label()?;
        let (line, col) = p.here();
        if p.peek().is_some() {
            return Err(syntax_err(line, col, "trailing input after rule"));
        }
        return Ok(RuleModel {
            rules: vec![],
            positive_label: label,
            default_label: label,
        });
    }

    p.expect(&TokKind::If, "'IF'")?;
    let mut rules = vec![p.conjunction()?];
    while p.peek() == Some(&TokKind::Or) {
        p.bump();
        rules.push(p.conjunction()?);
    }
    p.expect(&TokKind::Then, "'THEN'")?;
    let positive_label = p.label()?;
    p.expect(&TokKind::Else, "'ELSE'")?;
    let default_label = p.label()?;
    let (line, col) = p.here();
    if p.peek().is_some() {
        return Err(syntax_err(line, col, "trailing input after rule"));
    }

    Ok(RuleModel {
        rules,
        positive_label,
        default_label,
    })
}

// ---------------------------------------------------------------------------
// Learning

/// Settings for the sequential-covering learner.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LearnerConfig {
    /// A grown rule is kept only if its precision on the remaining data
    /// reaches this bar.
    pub min_precision: f64,
    /// Maximum conditions per conjunction.
    pub max_conditions: usize,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            min_precision: 0.9,
            max_conditions: 3,
        }
    }
}

/// Greedy sequential covering for the positive class (label 1).
///
/// One conjunction at a time is grown by adding the single-feature
/// threshold condition with the best FOIL gain, with candidate thresholds
/// at midpoints between consecutive distinct sorted values. Growth stops
/// when the conjunction's precision on the remaining data reaches
/// `min_precision`, no condition has positive gain, or the condition cap
/// is hit. Covered positives are then removed and the process repeats
/// until no positives remain or a grown rule misses the precision bar.
/// Gain ties break toward the lexicographically smaller feature name,
/// then `<=` before `>=`, then the smaller threshold, so learning is
/// deterministic.
pub fn learn_rules(train: &LabeledDataset, config: &LearnerConfig) -> Result<RuleModel> {
    if train.n_rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    let n_pos = train.labels().iter().filter(|&&y| y == 1).count();
    if n_pos == 0 || n_pos == train.n_rows() {
        return Err(Error::SingleClass);
    }

    let mut remaining: Vec<usize> = (0..train.n_rows()).collect();
    let mut rules: Vec<Conjunction> = Vec::new();

    loop {
        let pos_left = remaining
            .iter()
            .filter(|&&i| train.labels()[i] == 1)
            .count();
        if pos_left == 0 {
            break;
        }
        match grow_rule(train, &remaining, config) {
            Some(conj) => {
                remaining.retain(|&i| {
                    train.labels()[i] == 0 || !conjunction_holds(&conj, train, i)
                });
                rules.push(conj);
            }
            None => break,
        }
    }

    let default_label = majority_label(train, &remaining);
    let model = RuleModel {
        rules,
        positive_label: 1,
        default_label,
    };

    // Guard: never ship a rule set that loses to the constant majority
    // classifier on its own training data.
    let bound = model.bind(train.feature_names())?;
    let model_correct = (0..train.n_rows())
        .filter(|&i| bound.predict(train.row(i)) == train.labels()[i])
        .count();
    let majority = majority_label(train, &(0..train.n_rows()).collect::<Vec<_>>());
    let majority_correct = train.labels().iter().filter(|&&y| y == majority).count();
    if model_correct < majority_correct {
        return Ok(RuleModel {
            rules: vec![],
            positive_label: majority,
            default_label: majority,
        });
    }
    Ok(model)
}

fn conjunction_holds(conj: &Conjunction, train: &LabeledDataset, row_idx: usize) -> bool {
    let row = train.row(row_idx);
    conj.conditions.iter().all(|c| {
        let idx = train
            .feature_names()
            .iter()
            .position(|n| n == &c.feature)
            .expect("learned condition references a training feature");
        c.op.holds(row[idx], c.threshold)
    })
}

fn majority_label(train: &LabeledDataset, indices: &[usize]) -> u8 {
    let pos = indices.iter().filter(|&&i| train.labels()[i] == 1).count();
    // Ties go to 0.
    u8::from(pos * 2 > indices.len())
}

struct CandidateCondition {
    feature_idx: usize,
    op: RuleOp,
    threshold: f64,
    gain: f64,
}

fn grow_rule(
    train: &LabeledDataset,
    remaining: &[usize],
    config: &LearnerConfig,
) -> Option<Conjunction> {
    let mut covered: Vec<usize> = remaining.to_vec();
    let mut conditions: Vec<(usize, RuleOp, f64)> = Vec::new();

    loop {
        let pos = covered
            .iter()
            .filter(|&&i| train.labels()[i] == 1)
            .count() as f64;
        let neg = covered.len() as f64 - pos;
        let precision_ok = !conditions.is_empty() && pos > 0.0
            && pos / (pos + neg) >= config.min_precision;
        if precision_ok || conditions.len() >= config.max_conditions {
            break;
        }
        match best_condition(train, &covered, pos, neg) {
            Some(best) if best.gain > 0.0 => {
                covered.retain(|&i| best.op.holds(train.row(i)[best.feature_idx], best.threshold));
                conditions.push((best.feature_idx, best.op, best.threshold));
            }
            _ => break,
        }
    }

    if conditions.is_empty() {
        return None;
    }
    let pos = covered
        .iter()
        .filter(|&&i| train.labels()[i] == 1)
        .count() as f64;
    let total = covered.len() as f64;
    if pos < 1.0 || pos / total < config.min_precision {
        return None;
    }
    Some(Conjunction {
        conditions: conditions
            .into_iter()
            .map(|(idx, op, threshold)| Condition {
                feature: train.feature_names()[idx].clone(),
                op,
                threshold,
            })
            .collect(),
    })
}

fn best_condition(
    train: &LabeledDataset,
    covered: &[usize],
    pos_before: f64,
    neg_before: f64,
) -> Option<CandidateCondition> {
    if pos_before == 0.0 {
        return None;
    }
    let base_info = (pos_before / (pos_before + neg_before)).log2();
    let mut best: Option<CandidateCondition> = None;

    for feature_idx in 0..train.n_features() {
        let mut values: Vec<f64> = covered
            .iter()
            .map(|&i| train.row(i)[feature_idx])
            .collect();
        values.sort_by(|a, b| a.partial_cmp(b).expect("finite feature values"));
        values.dedup();
        for pair in values.windows(2) {
            let threshold = 0.5 * (pair[0] + pair[1]);
            for op in [RuleOp::Le, RuleOp::Ge] {
                let mut p = 0.0f64;
                let mut n = 0.0f64;
                for &i in covered {
                    if op.holds(train.row(i)[feature_idx], threshold) {
                        if train.labels()[i] == 1 {
                            p += 1.0;
                        } else {
                            n += 1.0;
                        }
                    }
                }
                if p == 0.0 {
                    continue;
                }
                let gain = p * ((p / (p + n)).log2() - base_info);
                let candidate = CandidateCondition {
                    feature_idx,
                    op,
                    threshold,
                    gain,
                };
                best = Some(match best {
                    None => candidate,
                    Some(cur) => pick_better(cur, candidate, train),
                });
            }
        }
    }
    best
}

fn pick_better(
    cur: CandidateCondition,
    new: CandidateCondition,
    train: &LabeledDataset,
) -> CandidateCondition {
    if new.gain > cur.gain {
        return new;
    }
    if new.gain < cur.gain {
        return cur;
    }
    let cur_name = &train.feature_names()[cur.feature_idx];
    let new_name = &train.feature_names()[new.feature_idx];
    if new_name < cur_name {
        return new;
    }
    if new_name > cur_name {
        return cur;
    }
    match (new.op, cur.op) {
        (RuleOp::Le, RuleOp::Ge) => return new,
        (RuleOp::Ge, RuleOp::Le) => return cur,
        _ => {}
    }
    if new.threshold < cur.threshold {
        new
    } else {
        cur
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::LabeledDataset;

    fn two_disjunct_rule() -> &'static str {
        "IF C2 <= -53.0 OR C2 <= -52.0 AND C1 <= -49.0 THEN 1 ELSE 0"
    }

    fn schema() -> Vec<String> {
        vec!["C1".to_string(), "C2".to_string()]
    }

    #[test]
    fn parse_single_condition_rule() {
        let model = parse_rules("IF C2 <= -53.0 THEN 1 ELSE 0").unwrap();
        assert_eq!(model.rules.len(), 1);
        assert_eq!(model.rules[0].conditions.len(), 1);
        assert_eq!(model.positive_label, 1);
        assert_eq!(model.default_label, 0);
    }

    #[test]
    fn parse_two_disjunct_rule() {
        let model = parse_rules(two_disjunct_rule()).unwrap();
        assert_eq!(model.rules.len(), 2);
        assert_eq!(model.rules[0].conditions.len(), 1);
        assert_eq!(model.rules[1].conditions.len(), 2);
        assert_eq!(model.positive_label, 1);
    }

    #[test]
    fn malformed_rule_reports_position() {
        let err = parse_rules("IF C2 <=").unwrap_err();
        match err {
            Error::RuleSyntax { line, column, .. } => {
                assert_eq!(line, 1);
                assert!(column >= 8);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_rules("IF C2 < -3 THEN 1 ELSE 0").is_err());
        assert!(parse_rules("IF C2 <= -3 THEN 2 ELSE 0").is_err());
        assert!(parse_rules("").is_err());
    }

    #[test]
    fn eval_two_disjunct_rule() {
        let model = parse_rules(two_disjunct_rule()).unwrap();
        let bound = model.bind(&schema()).unwrap();
        // x = (C1, C2)
        assert_eq!(bound.predict(&[0.0, -60.0]), 1); // first disjunct
        assert_eq!(bound.predict(&[-30.0, -40.0]), 0); // no disjunct
        assert_eq!(bound.predict(&[-50.0, -52.5]), 1); // second disjunct
    }

    #[test]
    fn empty_rule_list_predicts_the_default() {
        let model = RuleModel {
            rules: vec![],
            positive_label: 1,
            default_label: 1,
        };
        let bound = model.bind(&schema()).unwrap();
        assert_eq!(bound.predict(&[1.0, 2.0]), 1);
        assert_eq!(model.to_string(), "ALWAYS 1");
        let back = parse_rules(&model.to_string()).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn display_round_trips_semantically() {
        for text in [
            "IF C2 <= -53.0 THEN 1 ELSE 0",
            two_disjunct_rule(),
            "IF a >= 1.5 AND b <= -2 AND a <= 9 OR b >= 100 THEN 0 ELSE 1",
        ] {
            let model = parse_rules(text).unwrap();
            let again = parse_rules(&model.to_string()).unwrap();
            assert_eq!(model, again);
        }
    }

    #[test]
    fn comments_and_newlines_are_allowed() {
        let text = "# learned on sample 1\nIF C2 <= -53.0\n  OR C2 <= -52.0 AND C1 <= -49.0\nTHEN 1 ELSE 0\n";
        let model = parse_rules(text).unwrap();
        assert_eq!(model, parse_rules(two_disjunct_rule()).unwrap());
    }

    #[test]
    fn bind_rejects_unknown_features() {
        let model = parse_rules("IF C9 <= 0 THEN 1 ELSE 0").unwrap();
        assert!(matches!(
            model.bind(&schema()).unwrap_err(),
            Error::UnknownFeature(f) if f == "C9"
        ));
    }

    #[test]
    fn disjunct_order_is_irrelevant() {
        let model = parse_rules(two_disjunct_rule()).unwrap();
        let mut permuted = model.clone();
        permuted.rules.reverse();
        let a = model.bind(&schema()).unwrap();
        let b = permuted.bind(&schema()).unwrap();
        for c1 in -6..6 {
            for c2 in -6..6 {
                let x = [c1 as f64 * 10.0, c2 as f64 * 10.0];
                assert_eq!(a.predict(&x), b.predict(&x));
            }
        }
    }

    fn dataset_1d(xs: &[f64], ys: &[u8]) -> LabeledDataset {
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        LabeledDataset::new(
            crate::data::FeatureMatrix::from_rows(rows, 1).unwrap(),
            ys.to_vec(),
            vec!["x".to_string()],
        )
        .unwrap()
    }

    #[test]
    fn learner_finds_a_threshold_inside_the_margin() {
        // label = 1 for x <= 0, noise-free, with a margin between -0.5 and 0.7
        let xs = [-3.0, -2.0, -1.0, -0.5, 0.7, 1.0, 2.0, 3.0];
        let ys = [1, 1, 1, 1, 0, 0, 0, 0];
        let model = learn_rules(&dataset_1d(&xs, &ys), &LearnerConfig::default()).unwrap();
        assert_eq!(model.rules.len(), 1);
        let cond = &model.rules[0].conditions[0];
        assert_eq!(cond.op, RuleOp::Le);
        assert!(cond.threshold > -0.5 && cond.threshold < 0.7);
        let bound = model.bind(&["x".to_string()]).unwrap();
        for (x, y) in xs.iter().zip(ys) {
            assert_eq!(bound.predict(&[*x]), y);
        }
    }

    #[test]
    fn random_labels_yield_no_rules_and_the_majority_default() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<f64> = (0..200).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ys: Vec<u8> = (0..200).map(|_| rng.random_range(0..2) as u8).collect();
        let config = LearnerConfig {
            min_precision: 0.9,
            max_conditions: 1,
        };
        let model = learn_rules(&dataset_1d(&xs, &ys), &config).unwrap();
        let n_pos = ys.iter().filter(|&&y| y == 1).count();
        let majority = u8::from(n_pos * 2 > ys.len());
        if model.rules.is_empty() {
            assert_eq!(model.default_label, majority);
        }
        // Whatever was learned must not lose to the majority classifier.
        let ds = dataset_1d(&xs, &ys);
        let bound = model.bind(ds.feature_names()).unwrap();
        let correct = (0..ds.n_rows())
            .filter(|&i| bound.predict(ds.row(i)) == ds.labels()[i])
            .count();
        let majority_correct = ys.iter().filter(|&&y| y == majority).count();
        assert!(correct >= majority_correct);
    }

    #[test]
    fn single_class_input_is_rejected() {
        let xs = [0.0, 1.0, 2.0];
        let ys = [1, 1, 1];
        assert!(matches!(
            learn_rules(&dataset_1d(&xs, &ys), &LearnerConfig::default()).unwrap_err(),
            Error::SingleClass
        ));
    }
}
