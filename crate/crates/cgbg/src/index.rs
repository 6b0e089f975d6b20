//! Mixed-radix indexing for dense tables.
//!
//! Every dense table in this crate is stored flat in row-major order: tuples
//! are linearized over their positions with the *last* position varying
//! fastest. This one convention is shared by payoff tables, type
//! distributions, and factor tables.

/// Product of `sizes`, or `None` if it overflows `usize`.
pub fn checked_table_len(sizes: &[usize]) -> Option<usize> {
    sizes.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s))
}

/// Product of `sizes`; panics on overflow.
pub fn table_len(sizes: &[usize]) -> usize {
    checked_table_len(sizes).expect("table size overflows usize")
}

/// Flat row-major index of `digits` in a table over `sizes`.
pub fn linearize(sizes: &[usize], digits: &[usize]) -> usize {
    debug_assert_eq!(sizes.len(), digits.len());
    let mut idx = 0;
    for (&size, &digit) in sizes.iter().zip(digits) {
        debug_assert!(digit < size);
        idx = idx * size + digit;
    }
    idx
}

/// Writes the row-major digits of `index` over `sizes` into `out`.
pub fn delinearize(sizes: &[usize], index: usize, out: &mut [usize]) {
    debug_assert_eq!(sizes.len(), out.len());
    let mut rest = index;
    for pos in (0..sizes.len()).rev() {
        out[pos] = rest % sizes[pos];
        rest /= sizes[pos];
    }
    debug_assert_eq!(rest, 0, "index out of range for sizes");
}

/// Advances `digits` to the next row-major tuple over `sizes`.
///
/// Returns `false` once the last tuple has been passed. Starting from all
/// zeros, a `loop { ...; if !next_tuple(..) { break } }` visits every tuple
/// exactly once, in the same order as the flat table layout.
pub fn next_tuple(sizes: &[usize], digits: &mut [usize]) -> bool {
    for pos in (0..sizes.len()).rev() {
        digits[pos] += 1;
        if digits[pos] < sizes[pos] {
            return true;
        }
        digits[pos] = 0;
    }
    false
}
