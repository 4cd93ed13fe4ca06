"""Pure-Python slot scheduler; reference twin of the compiled ``_slots`` kernel.

Both implementations perform the same floating-point operations in the same
order so their outputs are bit-identical. Keep them in lockstep.
"""

from __future__ import annotations

import math

import numpy as np

# counter columns
OK_CUR, FAIL_CUR, DROP_CUR, OK_OLD, FAIL_OLD, DROP_OLD, QUEUED_CUR = range(7)
N_COUNTERS = 7
# audit outcome codes
AUDIT_OK, AUDIT_FAIL, AUDIT_DROP = 0, 1, 2


def run_slots(
    q_arr, q_size, q_rem, q_dead, q_rok, q_coh, q_head, q_len,
    rr_ptr, slice_start, gain, sla_rate, sla_lat, alloc,
    a_time, a_user, a_size, a_coh, a_pos,
    fading, t0, slot, tx_power, noise_psd, total_bw, cohort,
    counters, delivered_bits, dropped, audit_i, audit_f,
):
    """Simulate ``fading.shape[0]`` scheduling slots in place.

    Returns ``(next_arrival_index, mean_spectrum_efficiency, n_audit_records)``.
    """
    n_slots, n_users = fading.shape
    n_slices = sla_rate.shape[0]
    cap = q_arr.shape[1]
    n_arr = a_time.shape[0]
    audit_cap = audit_i.shape[0]
    n_audit = 0

    user_slice = np.empty(n_users, dtype=np.int64)
    for n in range(n_slices):
        user_slice[slice_start[n]:slice_start[n + 1]] = n

    rates = [0.0] * n_users
    se_sum = 0.0

    for k in range(n_slots):
        t = t0 + k * slot

        while a_pos < n_arr and a_time[a_pos] <= t:
            u = a_user[a_pos]
            n = user_slice[u]
            if q_len[u] == cap:
                raise OverflowError("packet queue capacity exceeded")
            i = (q_head[u] + q_len[u]) % cap
            q_arr[u, i] = a_time[a_pos]
            q_size[u, i] = a_size[a_pos]
            q_rem[u, i] = a_size[a_pos]
            q_dead[u, i] = a_time[a_pos] + sla_lat[n]
            q_rok[u, i] = 1
            q_coh[u, i] = a_coh[a_pos]
            q_len[u] += 1
            a_pos += 1

        rate_sum = 0.0
        for n in range(n_slices):
            w = alloc[n]
            for u in range(slice_start[n], slice_start[n + 1]):
                # expire head-of-line packets that can no longer meet their deadline
                while q_len[u] > 0 and q_dead[u, q_head[u]] <= t:
                    i = q_head[u]
                    if q_coh[u, i] == cohort:
                        counters[n, DROP_CUR] += 1
                    else:
                        counters[n, DROP_OLD] += 1
                    dropped[n] += 1
                    if n_audit < audit_cap:
                        audit_i[n_audit, 0] = u
                        audit_i[n_audit, 1] = AUDIT_DROP
                        audit_f[n_audit, 0] = q_arr[u, i]
                        audit_f[n_audit, 1] = t
                        audit_f[n_audit, 2] = q_dead[u, i]
                        audit_f[n_audit, 3] = q_rok[u, i]
                        n_audit += 1
                    q_head[u] = (i + 1) % cap
                    q_len[u] -= 1
                if q_len[u] > 0:
                    s = gain[u] * fading[k, u] * tx_power / (noise_psd * w)
                    r = w * math.log2(1.0 + s)
                    rates[u] = r
                    rate_sum += r

            # round robin over backlogged users of this slice
            start = slice_start[n]
            nu = slice_start[n + 1] - start
            for j in range(nu):
                cand = (rr_ptr[n] + j) % nu
                u = start + cand
                if q_len[u] > 0:
                    r = rates[u]
                    left = r * slot
                    used = 0.0
                    rate_ok = r >= sla_rate[n]
                    while q_len[u] > 0 and left > 0.0:
                        i = q_head[u]
                        if not rate_ok:
                            q_rok[u, i] = 0
                        rem = q_rem[u, i]
                        if rem <= left:
                            left -= rem
                            used += rem
                            delivered_bits[n] += rem
                            q_rem[u, i] = 0.0
                            finish = t + used / r
                            ok = q_rok[u, i] == 1 and finish <= q_dead[u, i]
                            if q_coh[u, i] == cohort:
                                counters[n, OK_CUR if ok else FAIL_CUR] += 1
                            else:
                                counters[n, OK_OLD if ok else FAIL_OLD] += 1
                            if n_audit < audit_cap:
                                audit_i[n_audit, 0] = u
                                audit_i[n_audit, 1] = AUDIT_OK if ok else AUDIT_FAIL
                                audit_f[n_audit, 0] = q_arr[u, i]
                                audit_f[n_audit, 1] = finish
                                audit_f[n_audit, 2] = q_dead[u, i]
                                audit_f[n_audit, 3] = q_rok[u, i]
                                n_audit += 1
                            q_head[u] = (i + 1) % cap
                            q_len[u] -= 1
                        else:
                            q_rem[u, i] = rem - left
                            used += left
                            delivered_bits[n] += left
                            left = 0.0
                    rr_ptr[n] = (cand + 1) % nu
                    break

        se_sum += rate_sum / total_bw

    for n in range(n_slices):
        for u in range(slice_start[n], slice_start[n + 1]):
            for j in range(q_len[u]):
                if q_coh[u, (q_head[u] + j) % cap] == cohort:
                    counters[n, QUEUED_CUR] += 1

    se_mean = se_sum / n_slots if n_slots > 0 else 0.0
    return a_pos, se_mean, n_audit
