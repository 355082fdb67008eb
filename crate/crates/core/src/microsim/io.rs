use std::io::Write;

use super::{MicroState, Observables};
use crate::geometry::Graph;

pub const OBSERVABLES_HEADER: &str = "t,N_A,N_B,N_AB,magnetization,domain_size_A";

pub fn write_observables_csv<W: Write>(mut w: W, samples: &[Observables]) -> std::io::Result<()> {
    writeln!(w, "{OBSERVABLES_HEADER}")?;
    for o in samples {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            o.t, o.n_a, o.n_b, o.n_ab, o.magnetization, o.domain_size_a
        )?;
    }
    Ok(())
}

/// One line per agent: `x y spin committed`.
pub fn write_spin_snapshot<W: Write>(mut w: W, state: &MicroState, g: &Graph) -> std::io::Result<()> {
    for (i, p) in g.positions().iter().enumerate() {
        writeln!(
            w,
            "{} {} {} {}",
            p.x(),
            p.y(),
            state.spin(i).value(),
            u8::from(state.is_committed(i))
        )?;
    }
    Ok(())
}
