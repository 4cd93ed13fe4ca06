# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled slot scheduler. Mirrors ``_slots_py.run_slots`` operation for operation."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log2

cnp.import_array()

cdef enum:
    OK_CUR = 0
    FAIL_CUR = 1
    DROP_CUR = 2
    OK_OLD = 3
    FAIL_OLD = 4
    DROP_OLD = 5
    QUEUED_CUR = 6
    AUDIT_OK = 0
    AUDIT_FAIL = 1
    AUDIT_DROP = 2


def run_slots(
    double[:, ::1] q_arr, double[:, ::1] q_size, double[:, ::1] q_rem, double[:, ::1] q_dead,
    signed char[:, ::1] q_rok, long long[:, ::1] q_coh, long long[::1] q_head, long long[::1] q_len,
    long long[::1] rr_ptr, long long[::1] slice_start, double[::1] gain,
    double[::1] sla_rate, double[::1] sla_lat, double[::1] alloc,
    double[::1] a_time, long long[::1] a_user, double[::1] a_size, long long[::1] a_coh, Py_ssize_t a_pos,
    double[:, ::1] fading, double t0, double slot, double tx_power, double noise_psd,
    double total_bw, long long cohort,
    long long[:, ::1] counters, double[::1] delivered_bits, long long[::1] dropped,
    long long[:, ::1] audit_i, double[:, ::1] audit_f,
):
    cdef Py_ssize_t n_slots = fading.shape[0]
    cdef Py_ssize_t n_users = fading.shape[1]
    cdef Py_ssize_t n_slices = sla_rate.shape[0]
    cdef long long cap = q_arr.shape[1]
    cdef Py_ssize_t n_arr = a_time.shape[0]
    cdef Py_ssize_t audit_cap = audit_i.shape[0]
    cdef Py_ssize_t n_audit = 0
    cdef Py_ssize_t k, n, u, j, start, nu, cand
    cdef long long i
    cdef double t, w, s, r, rate_sum, left, used, rem, finish
    cdef double se_sum = 0.0
    cdef double se_mean = 0.0
    cdef bint rate_ok, ok

    cdef long long[::1] user_slice = np.empty(n_users, dtype=np.int64)
    cdef double[::1] rates = np.zeros(n_users, dtype=np.float64)
    for n in range(n_slices):
        for u in range(slice_start[n], slice_start[n + 1]):
            user_slice[u] = n

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
                    r = w * log2(1.0 + s)
                    rates[u] = r
                    rate_sum += r

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
                                if ok:
                                    counters[n, OK_CUR] += 1
                                else:
                                    counters[n, FAIL_CUR] += 1
                            else:
                                if ok:
                                    counters[n, OK_OLD] += 1
                                else:
                                    counters[n, FAIL_OLD] += 1
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

    if n_slots > 0:
        se_mean = se_sum / n_slots
    return a_pos, se_mean, n_audit
