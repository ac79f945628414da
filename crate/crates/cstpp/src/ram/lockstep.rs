use super::Trace;

/// True when `simulated` reproduces the input and output sequences of
/// `original` and every stretch between consecutive I/O events (including
/// the stretch from the start to the first event and from the last event to
/// the halt) is at most `lag` times its original length.
pub fn check_lockstep(original: &Trace, simulated: &Trace, lag: u64) -> bool {
    if original.inputs != simulated.inputs
        || original.outputs != simulated.outputs
        || original.io_timestamps.len() != simulated.io_timestamps.len()
    {
        return false;
    }
    let marks = |t: &Trace| {
        let mut m = Vec::with_capacity(t.io_timestamps.len() + 2);
        m.push(0);
        m.extend_from_slice(&t.io_timestamps);
        m.push(t.final_meter.instruction_count);
        m
    };
    let (a, b) = (marks(original), marks(simulated));
    a.windows(2)
        .zip(b.windows(2))
        .all(|(wa, wb)| wb[1].saturating_sub(wb[0]) <= lag.saturating_mul(wa[1] - wa[0]))
}
