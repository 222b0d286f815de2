use crate::isa::Reg;

use super::{Asm, Gadget, IO};

/// Decodes the von Neumann naturals `0..limit` inside a code of a finite
/// membership relation, where `pair(j, k)` in the oracle means `j ∈ k`.
///
/// `k_0` is the least index without predecessors and `k_{i+1}` the least
/// index whose predecessors are exactly `k_0, ..., k_i`. Both "for all
/// predecessors" checks scan the oracle in a flag loop. Candidates are
/// bounded by one past the largest index occurring in the code, beyond
/// which `k_0` always exists and no later `k_i` can.
///
/// On input `i < limit` the output is `k_i`. Output 0 signals failure:
/// some `k_i` does not exist, or `i >= limit`.
pub fn decode_naturals(limit: usize) -> Gadget {
    let mut a = Asm::with_flags();
    let n = a.reg();
    let ua = a.reg();
    let ub = a.reg();
    let q = a.reg();
    let bound = a.reg();
    let k = a.reg();
    let ks: Vec<Reg> = (0..limit).map(|_| a.reg()).collect();
    let fail = a.label();

    a.flag_loop(Some(n), |a, next| {
        a.copy(n, q);
        a.oracle(q);
        a.jz(q, next);
        a.dec(q);
        a.unpair(n, ua, ub);
        a.max_into(bound, ua);
        a.max_into(bound, ub);
        a.clear(ua);
        a.clear(ub);
    });
    a.inc(bound);

    for t in 0..limit {
        let known_so_far = &ks[..t];
        a.clear(k);
        let search = a.here();
        let reject = a.label();
        let accept = a.label();
        for &ks_s in known_so_far {
            a.pair(ks_s, k, q);
            a.oracle(q);
            a.jz(q, reject);
            a.dec(q);
        }
        a.flag_loop(Some(n), |a, next| {
            a.copy(n, q);
            a.oracle(q);
            a.jz(q, next);
            a.dec(q);
            a.unpair(n, ua, ub);
            let is_pred = a.label();
            let fine = a.label();
            a.jump_if_eq(ub, k, is_pred, fine);
            a.bind(is_pred);
            for &ks_s in known_so_far {
                let other = a.label();
                a.jump_if_eq(ua, ks_s, fine, other);
                a.bind(other);
            }
            a.clear(ua);
            a.clear(ub);
            a.clear(n);
            a.jmp(reject);
            a.bind(fine);
            a.clear(ua);
            a.clear(ub);
        });
        a.jmp(accept);
        a.bind(reject);
        a.inc(k);
        a.jump_if_less(bound, k, fail, search);
        a.bind(accept);
        a.copy(k, ks[t]);
    }

    for (s, &ks_s) in ks.iter().enumerate() {
        let hit = a.label();
        let miss = a.label();
        a.jump_if_const(IO, s as u64, hit, miss);
        a.bind(hit);
        a.copy(ks_s, IO);
        a.halt();
        a.bind(miss);
    }
    a.bind(fail);
    a.clear(IO);
    a.halt();
    Gadget::new("decode-naturals", format!("limit={limit}"), a.finish())
}
