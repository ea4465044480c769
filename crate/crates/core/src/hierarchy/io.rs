//! Tab-separated hierarchy dump, one cluster per line in id order:
//!
//! ```text
//! level	cluster_id	parent_ids	member_count	weight	internal_weight	gamma
//! ```
//!
//! `level` is the level the cluster was formed at. `parent_ids` is a
//! comma-separated list or `-` for top-level clusters.
//! Reals use the shortest decimal form that parses back to the same value.

use std::io::{BufRead, Write};

use super::{ClusterId, Hierarchy};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterRecord {
    pub level: usize,
    pub id: ClusterId,
    pub parents: Vec<ClusterId>,
    pub member_count: usize,
    pub weight: f64,
    pub internal_weight: f64,
    pub gamma: f64,
}

impl ClusterRecord {
    pub fn records(hierarchy: &Hierarchy) -> Vec<ClusterRecord> {
        hierarchy
            .clusters()
            .iter()
            .map(|c| ClusterRecord {
                level: c.level,
                id: c.id,
                parents: c.ancestors.clone(),
                member_count: c.member_count,
                weight: c.weight,
                internal_weight: c.internal_weight,
                gamma: c.gamma_at,
            })
            .collect()
    }
}

pub fn write_hierarchy<W: Write>(hierarchy: &Hierarchy, mut out: W) -> Result<()> {
    for r in ClusterRecord::records(hierarchy) {
        let parents = if r.parents.is_empty() {
            "-".to_string()
        } else {
            r.parents.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",")
        };
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.level, r.id, parents, r.member_count, r.weight, r.internal_weight, r.gamma
        )?;
    }
    Ok(())
}

pub fn read_hierarchy<R: BufRead>(input: R) -> Result<Vec<ClusterRecord>> {
    let mut records = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| Error::Parse { line: idx + 1, message };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 7 {
            return Err(bad(format!("expected 7 tab-separated fields, got {}", fields.len())));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("invalid integer {s:?}")));
        let real = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("invalid number {s:?}")));
        let parents = if fields[2] == "-" {
            Vec::new()
        } else {
            fields[2].split(',').map(int).collect::<Result<Vec<_>>>()?
        };
        records.push(ClusterRecord {
            level: int(fields[0])?,
            id: int(fields[1])?,
            parents,
            member_count: int(fields[3])?,
            weight: real(fields[4])?,
            internal_weight: real(fields[5])?,
            gamma: real(fields[6])?,
        });
    }
    Ok(records)
}
