//! `--config` files: flat TOML keys named like the flags, optionally grouped
//! under a `[fit]`, `[select]`, ... table that overrides the top level.

use std::path::Path;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;

use crate::args::*;

pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>, command: &str) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut table: toml::Table = text.parse().with_context(|| format!("parsing config {}", path.display()))?;
    let section = match table.remove(command) {
        Some(toml::Value::Table(t)) => t,
        Some(_) => anyhow::bail!("config key `{command}` must be a table"),
        None => toml::Table::new(),
    };
    let mut merged: toml::Table =
        table.into_iter().filter(|(k, v)| !(v.is_table() && is_command(k))).collect();
    merged.extend(section);
    let value = toml::Value::Table(merged);
    value.try_into().with_context(|| format!("config {} has invalid `{command}` settings", path.display()))
}

fn is_command(key: &str) -> bool {
    matches!(key, "transform" | "simulate" | "fit" | "select" | "interpret" | "eval")
}

/// Command-line values win over file values.
pub trait Overlay {
    fn overlay(self, file: Self) -> Self;
}

macro_rules! overlay_fields {
    ($ty:ty { $($opt:ident),* } flags { $($flag:ident),* } nested { $($nested:ident),* }) => {
        impl Overlay for $ty {
            #[allow(unused_mut)]
            fn overlay(mut self, file: Self) -> Self {
                $( self.$opt = self.$opt.or(file.$opt); )*
                $( self.$flag = self.$flag || file.$flag; )*
                $( self.$nested = self.$nested.overlay(file.$nested); )*
                self
            }
        }
    };
}

overlay_fields!(TransformArgs { input, zero_mode, output } flags {} nested {});
overlay_fields!(SimulateArgs { scenario, replicates, seed, outdir, custom } flags {} nested {});
overlay_fields!(EngineArgs { restarts, tol, max_iter, seed, empty_cluster_policy, alpha_min, alpha_max } flags { binary_only } nested {});
overlay_fields!(FitArgs { network, k, output } flags { no_responsibilities } nested { engine });
overlay_fields!(SelectArgs { network, kmin, kmax, criterion, output } flags {} nested { engine });
overlay_fields!(InterpretArgs { fit, network, outdir } flags {} nested {});
overlay_fields!(EvalArgs { fit, truth, true_params, baseline_edges, output } flags {} nested {});
