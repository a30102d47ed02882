use rayon::prelude::*;

use super::TokenId;

/// Sorts all suffix start offsets of `text` by prefix doubling.
///
/// After round `k` every suffix carries the rank of its first `2^k` tokens;
/// the loop ends once all ranks are distinct. A suffix that runs off the end
/// of the text compares below any token. Every suffix is distinct, so the
/// final order is unique and independent of the sort's tie handling.
pub(crate) fn build_suffix_array(text: &[TokenId]) -> Vec<u64> {
    let n = text.len();
    if n == 0 {
        return Vec::new();
    }
    let mut sa: Vec<usize> = (0..n).collect();
    let mut rank: Vec<u64> = text.iter().map(|&t| t as u64).collect();
    let mut next = vec![0u64; n];
    let mut k = 1usize;
    loop {
        {
            let rank = &rank;
            let key = |i: usize| (rank[i], if i + k < n { rank[i + k] + 1 } else { 0 });
            sa.par_sort_unstable_by_key(|&i| key(i));
            next[sa[0]] = 0;
            for w in 1..n {
                let bump = (key(sa[w - 1]) < key(sa[w])) as u64;
                next[sa[w]] = next[sa[w - 1]] + bump;
            }
        }
        std::mem::swap(&mut rank, &mut next);
        if rank[sa[n - 1]] as usize == n - 1 || k >= n {
            break;
        }
        k *= 2;
    }
    sa.into_iter().map(|i| i as u64).collect()
}
