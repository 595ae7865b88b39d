//! Integer partitions in multiplicity form.

/// One part size with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Part {
    pub size: u32,
    pub mult: u32,
}

/// All partitions of `total` into parts of size `1..=max_part` using at most
/// `max_count` parts, each listed as its nonzero multiplicities (largest part first).
pub fn partitions(total: u32, max_part: u32, max_count: u64) -> Vec<Vec<Part>> {
    let mut out = Vec::new();
    let mut stack = Vec::new();
    descend(total, max_part.min(total), max_count, &mut stack, &mut out);
    out
}

fn descend(remaining: u32, size: u32, count_left: u64, stack: &mut Vec<Part>, out: &mut Vec<Vec<Part>>) {
    if remaining == 0 {
        out.push(stack.clone());
        return;
    }
    if size == 0 {
        return;
    }
    if size == 1 {
        if u64::from(remaining) <= count_left {
            stack.push(Part { size: 1, mult: remaining });
            out.push(stack.clone());
            stack.pop();
        }
        return;
    }
    let most = u64::from(remaining / size).min(count_left) as u32;
    for mult in (0..=most).rev() {
        if mult > 0 {
            stack.push(Part { size, mult });
        }
        descend(remaining - mult * size, size - 1, count_left - u64::from(mult), stack, out);
        if mult > 0 {
            stack.pop();
        }
    }
}
