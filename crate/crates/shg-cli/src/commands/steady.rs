//! `shg steady`: homogeneous steady-state branches at the configured pump.

use super::Ctx;
use crate::output::{fmt, write_csv};
use crate::{CliResult, CommonArgs};
use serde_json::json;
use shg_core::steady_states;

pub fn run(common: &CommonArgs) -> CliResult<()> {
    let mut ctx = Ctx::new("steady", common)?;
    let threshold = ctx.resolve_pump()?;
    let states = steady_states(&ctx.spec.params)?;

    let path = ctx.path("steady.csv");
    write_csv(
        &path,
        &[
            "branch",
            "intensity",
            "re_a1",
            "im_a1",
            "re_a2",
            "im_a2",
            "sh_modulus",
            "q_valid",
            "marginal",
        ],
        states.iter().enumerate().map(|(i, s)| {
            vec![
                i.to_string(),
                fmt(s.intensity),
                fmt(s.a1.re),
                fmt(s.a1.im),
                fmt(s.a2.re),
                fmt(s.a2.im),
                fmt(s.sh_modulus()),
                (s.sh_modulus() < 2.0).to_string(),
                s.marginal.to_string(),
            ]
        }),
    )?;

    ctx.finish(json!({
        "branches": states.len(),
        "threshold": threshold,
    }))
}
