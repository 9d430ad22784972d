use std::collections::{HashMap, HashSet};

use super::{Column, Result, Table, TabularError};

/// Inner join on `key`. Output columns are the left columns followed by the
/// right columns other than the key; clashing right names get a `_right`
/// suffix. Rows follow left order, then right order within a key.
pub fn merge_on_key(left: &Table, right: &Table, key: &str) -> Result<Table> {
    let lk = left.column_index(key).ok_or_else(|| TabularError::KeyMissing(key.to_string()))?;
    let rk = right.column_index(key).ok_or_else(|| TabularError::KeyMissing(key.to_string()))?;
    let mut by_key: HashMap<String, Vec<usize>> = HashMap::new();
    for r in 0..right.n_rows() {
        let k = right.value(r, rk);
        if !k.is_missing() {
            by_key.entry(k.key()).or_default().push(r);
        }
    }
    let (mut li, mut ri) = (Vec::new(), Vec::new());
    for l in 0..left.n_rows() {
        if let Some(rs) = by_key.get(&left.value(l, lk).key()) {
            for &r in rs {
                li.push(l);
                ri.push(r);
            }
        }
    }
    let left_part = left.select_rows(&li);
    let right_part = right.select_rows(&ri);
    let mut names = left.column_names().to_vec();
    let mut columns = left_part.columns;
    for (c, (name, col)) in right.column_names().iter().zip(right_part.columns).enumerate() {
        if c == rk {
            continue;
        }
        let name = if names.contains(name) { format!("{name}_right") } else { name.clone() };
        names.push(name);
        columns.push(col);
    }
    let mut out = Table::new(names, columns)?;
    out.n_rows = li.len();
    Ok(out)
}

/// Drops exact duplicate rows, keeping the first occurrence.
pub fn dedupe(table: &Table) -> Table {
    let mut seen = HashSet::new();
    let keep: Vec<usize> = (0..table.n_rows())
        .filter(|&r| {
            let sig: Vec<String> = table.row(r).iter().map(|v| v.key()).collect();
            seen.insert(sig)
        })
        .collect();
    if keep.len() == table.n_rows() {
        return table.clone();
    }
    table.select_rows(&keep)
}

/// Maps the monthly STATUS symbol to a binary default flag: `0`, `1`, `C`,
/// `X` are non-default (0); `2`–`5` are default (1). The STATUS column is
/// replaced by a numeric column named `target`.
pub fn map_target_status(table: &Table, target: &str) -> Result<Table> {
    const STATUS: &str = "STATUS";
    let col = table.column(STATUS).ok_or_else(|| TabularError::UnknownColumn(STATUS.to_string()))?;
    let mapped = (0..table.n_rows())
        .map(|r| {
            let sym = col.get(r).to_string();
            match sym.trim() {
                "0" | "1" | "C" | "X" => Ok(0.0),
                "2" | "3" | "4" | "5" => Ok(1.0),
                other => Err(TabularError::UnknownStatusSymbol(other.to_string())),
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    table.with_column(STATUS, Column::Numeric(mapped))?.rename_column(STATUS, target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{toy, Value};

    fn n(v: f64) -> Value {
        Value::Num(v)
    }
    fn s(v: &str) -> Value {
        Value::Text(v.into())
    }

    #[test]
    fn inner_join_keeps_matches_in_left_order() {
        let left = toy(&["ID", "a"], vec![vec![n(2.0), s("x")], vec![n(1.0), s("y")], vec![n(3.0), s("z")]]);
        let right = toy(&["ID", "a", "b"], vec![vec![n(1.0), n(10.0), n(0.5)], vec![n(2.0), n(20.0), n(0.7)]]);
        let m = merge_on_key(&left, &right, "ID").unwrap();
        assert_eq!(m.column_names(), &["ID", "a", "a_right", "b"]);
        assert_eq!(m.n_rows(), 2);
        assert_eq!(m.row(0), vec![n(2.0), s("x"), n(20.0), n(0.7)]);
    }

    #[test]
    fn join_with_empty_right_is_empty() {
        let left = toy(&["ID"], vec![vec![n(1.0)]]);
        let right =
            Table::new(vec!["ID".into(), "q".into()], vec![Column::Numeric(vec![]), Column::Numeric(vec![])]).unwrap();
        assert_eq!(merge_on_key(&left, &right, "ID").unwrap().n_rows(), 0);
        assert!(matches!(merge_on_key(&left, &right, "nope"), Err(TabularError::KeyMissing(_))));
    }

    #[test]
    fn dedupe_keeps_first() {
        let t = toy(&["a", "b"], vec![vec![n(1.0), s("x")], vec![n(1.0), s("x")], vec![n(2.0), Value::Missing]]);
        let d = dedupe(&t);
        assert_eq!(d.n_rows(), 2);
        let unique = dedupe(&d);
        assert_eq!(unique, d);
    }

    #[test]
    fn status_mapping() {
        let t = toy(&["STATUS"], vec![vec![s("C")], vec![s("5")], vec![s("X")], vec![s("2")], vec![s("0")]]);
        let m = map_target_status(&t, "default").unwrap();
        assert_eq!(m.numeric("default").unwrap(), &[0.0, 1.0, 0.0, 1.0, 0.0]);
        let bad = toy(&["STATUS"], vec![vec![s("Q")]]);
        assert!(matches!(map_target_status(&bad, "d"), Err(TabularError::UnknownStatusSymbol(q)) if q == "Q"));
    }
}
