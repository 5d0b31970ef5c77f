"""Numba kernels for the discrete-event simulator.

One logical-thread step is one node touch; threads advance on a shared
clock with the earliest-time thread (lowest id on ties) taking the next
step, so runs are bit-deterministic for a given seed.  Structure state is
mutated when an operation is resolved; latency accrues touch by touch so
stall windows and invalidations interleave across threads.
"""

from __future__ import annotations

import numpy as np
from numba import njit

U64 = np.uint64
GAMMA = U64(0x9E3779B97F4A7C15)
M1 = U64(0xBF58476D1CE4E5B9)
M2 = U64(0x94D049BB133111EB)

LL, HT, SL, BST = 0, 1, 2, 3
OP_SEARCH, OP_INSERT, OP_DELETE = 0, 1, 2
READ, CAS = 0, 1


@njit(inline="always")
def _mix64(x):
    x = (x ^ (x >> U64(30))) * M1
    x = (x ^ (x >> U64(27))) * M2
    return x ^ (x >> U64(31))


@njit(inline="always")
def _word(seed, op_idx, w):
    return _mix64(seed + (U64(op_idx) * U64(4) + U64(w + 1)) * GAMMA)


@njit(inline="always")
def _u01(word):
    return (word >> U64(11)) * (1.0 / 9007199254740992.0)


@njit(inline="always")
def _append(path_slot, path_flag, n, slot, flag, read_stamp, cas_stamp, serial):
    if flag == READ:
        if read_stamp[slot] == serial:
            return n
        read_stamp[slot] = serial
    else:
        if cas_stamp[slot] == serial:
            return n
        cas_stamp[slot] = serial
    path_slot[n] = slot
    path_flag[n] = flag
    return n + 1


@njit(cache=True)
def _resolve_chain(nxt, key_of, node_slot, head_id, kind, key,
                   path_slot, path_flag, read_stamp, cas_stamp, serial):
    n = 0
    pred = head_id
    n = _append(path_slot, path_flag, n, node_slot[pred], READ, read_stamp, cas_stamp, serial)
    cur = nxt[pred]
    while key_of[cur] < key:
        n = _append(path_slot, path_flag, n, node_slot[cur], READ, read_stamp, cas_stamp, serial)
        pred = cur
        cur = nxt[cur]
    n = _append(path_slot, path_flag, n, node_slot[cur], READ, read_stamp, cas_stamp, serial)
    found = key_of[cur] == key
    if kind == OP_INSERT and not found:
        nxt[key] = cur
        nxt[pred] = key
        n = _append(path_slot, path_flag, n, node_slot[pred], CAS, read_stamp, cas_stamp, serial)
    elif kind == OP_DELETE and found:
        n = _append(path_slot, path_flag, n, node_slot[cur], CAS, read_stamp, cas_stamp, serial)
        n = _append(path_slot, path_flag, n, node_slot[pred], CAS, read_stamp, cas_stamp, serial)
        nxt[pred] = nxt[cur]
    return n


@njit(inline="always")
def _sl_val_slot(k, h, hcap):
    return k * hcap + h


@njit(inline="always")
def _sl_rou_slot(k, h, hcap, rou_base):
    return rou_base + k * hcap + h


@njit(cache=True)
def _resolve_sl(heights, nxt, h_max, key_range, kind, key, h_draw, preds,
                path_slot, path_flag, read_stamp, cas_stamp, serial):
    hcap = h_max + 1
    rou_base = (key_range + 2) * hcap
    n = 0
    x = 0
    n = _append(path_slot, path_flag, n, _sl_val_slot(0, h_max, hcap), READ,
                read_stamp, cas_stamp, serial)
    for level in range(h_max, -1, -1):
        while True:
            if level >= 1:
                slot = _sl_rou_slot(x, heights[x], hcap, rou_base)
            else:
                slot = _sl_val_slot(x, heights[x], hcap)
            n = _append(path_slot, path_flag, n, slot, READ, read_stamp, cas_stamp, serial)
            y = nxt[level, x]
            n = _append(path_slot, path_flag, n, _sl_val_slot(y, heights[y], hcap), READ,
                        read_stamp, cas_stamp, serial)
            if y == key and kind == OP_SEARCH:
                return n  # found during the descent; a search stops here
            if y < key:
                x = y
            else:
                preds[level] = x
                break
    leaf = nxt[0, x]
    found = leaf == key
    if kind == OP_INSERT and not found:
        heights[key] = h_draw
        for level in range(h_draw + 1):
            p = preds[level]
            nxt[level, key] = nxt[level, p]
            nxt[level, p] = key
            if level == 0:
                slot = _sl_val_slot(p, heights[p], hcap)
            else:
                slot = _sl_rou_slot(p, heights[p], hcap, rou_base)
            n = _append(path_slot, path_flag, n, slot, CAS, read_stamp, cas_stamp, serial)
    elif kind == OP_DELETE and found:
        h = heights[key]
        n = _append(path_slot, path_flag, n, _sl_val_slot(key, h, hcap), CAS,
                    read_stamp, cas_stamp, serial)
        if h >= 1:
            n = _append(path_slot, path_flag, n, _sl_rou_slot(key, h, hcap, rou_base), CAS,
                        read_stamp, cas_stamp, serial)
        for level in range(h + 1):
            p = preds[level]
            nxt[level, p] = nxt[level, key]
            if level == 0:
                slot = _sl_val_slot(p, heights[p], hcap)
            else:
                slot = _sl_rou_slot(p, heights[p], hcap, rou_base)
            n = _append(path_slot, path_flag, n, slot, CAS, read_stamp, cas_stamp, serial)
        heights[key] = -1
    return n


@njit(inline="always")
def _bst_int_slot(k, key_range):
    return key_range + 1 if k < 0 else k


@njit(inline="always")
def _bst_ext_slot(k, key_range):
    if k == 0:  # empty placeholder leaf
        return 2 * key_range + 2
    return key_range + 1 + k


@njit(cache=True)
def _resolve_bst(int_left, int_right, key_range, kind, key,
                 path_slot, path_flag, read_stamp, cas_stamp, serial):
    n = 0
    n = _append(path_slot, path_flag, n, _bst_int_slot(-1, key_range), READ,
                read_stamp, cas_stamp, serial)
    n = _append(path_slot, path_flag, n, _bst_int_slot(0, key_range), READ,
                read_stamp, cas_stamp, serial)
    gp = -1
    p = 0
    cur = int_right[0]
    while cur > 0:
        n = _append(path_slot, path_flag, n, _bst_int_slot(cur, key_range), READ,
                    read_stamp, cas_stamp, serial)
        gp = p
        p = cur
        cur = int_left[cur] if key < cur else int_right[cur]
    leaf_key = -cur  # 0 means empty placeholder
    n = _append(path_slot, path_flag, n, _bst_ext_slot(leaf_key, key_range), READ,
                read_stamp, cas_stamp, serial)
    found = leaf_key == key
    if kind == OP_INSERT and not found:
        n = _append(path_slot, path_flag, n, _bst_int_slot(p, key_range), CAS,
                    read_stamp, cas_stamp, serial)
        if leaf_key == 0:
            new_child = -key
        else:
            m = leaf_key
            nk = key if key > m else m
            lo = m if key > m else key
            int_left[nk] = -lo
            int_right[nk] = -nk
            new_child = nk
        if p != 0 and key < p:
            int_left[p] = new_child
        else:
            int_right[p] = new_child
    elif kind == OP_DELETE and found:
        n = _append(path_slot, path_flag, n, _bst_int_slot(p, key_range), CAS,
                    read_stamp, cas_stamp, serial)
        n = _append(path_slot, path_flag, n, _bst_int_slot(gp, key_range), CAS,
                    read_stamp, cas_stamp, serial)
        if p == 0:
            int_right[0] = 0
        else:
            sibling = int_right[p] if key < p else int_left[p]
            if gp != 0 and key < gp:
                int_left[gp] = sibling
            else:
                int_right[gp] = sibling
    return n


@njit(inline="always")
def _lru_touch(lru_next, lru_prev, resident, counts, pool, line, sent, cap):
    """Refresh one line in one LRU pool; returns True on hit."""
    hit = resident[pool, line]
    if hit:
        lru_next[pool, lru_prev[pool, line]] = lru_next[pool, line]
        lru_prev[pool, lru_next[pool, line]] = lru_prev[pool, line]
    else:
        if counts[pool] == cap:
            victim = lru_prev[pool, sent]
            lru_next[pool, lru_prev[pool, victim]] = sent
            lru_prev[pool, sent] = lru_prev[pool, victim]
            resident[pool, victim] = False
        else:
            counts[pool] += 1
        resident[pool, line] = True
    first = lru_next[pool, sent]
    lru_next[pool, line] = first
    lru_prev[pool, line] = sent
    lru_prev[pool, first] = line
    lru_next[pool, sent] = line
    return hit


@njit(cache=True)
def run_sim(
    structure, n_threads, warmup_ops, measured_ops, thread_seeds,
    # workload draw tables
    key_cdf, ins_thresh, upd_thresh, height_cum, no_delete,
    # platform
    t_app, t_cmp, t_cas, t_rec, mem_lat, walk_lat,
    data_caps, data_lat, tlb_caps, tlb_lat,
    # geometry
    slot_to_line, line_to_page, n_lines, n_pages,
    # structure state
    chain_nxt, chain_key_of, chain_node_slot, bucket_head, load_factor,
    sl_heights, sl_nxt, h_max,
    bst_left, bst_right,
    key_range,
    # inter-arrival tracking
    tracked_of_line, track_times, track_counts,
):
    nd = len(data_caps)
    nt = len(tlb_caps)
    n_slots = len(slot_to_line)

    lru_next = np.empty((n_threads * nd, n_lines + 1), dtype=np.int32)
    lru_prev = np.empty((n_threads * nd, n_lines + 1), dtype=np.int32)
    lru_res = np.zeros((n_threads * nd, n_lines), dtype=np.bool_)
    lru_counts = np.zeros(n_threads * nd, dtype=np.int64)
    for pool in range(n_threads * nd):
        lru_next[pool, n_lines] = n_lines
        lru_prev[pool, n_lines] = n_lines
    tlb_next = np.empty((n_threads * nt, n_pages + 1), dtype=np.int32)
    tlb_prev = np.empty((n_threads * nt, n_pages + 1), dtype=np.int32)
    tlb_res = np.zeros((n_threads * nt, n_pages), dtype=np.bool_)
    tlb_counts = np.zeros(n_threads * nt, dtype=np.int64)
    for pool in range(n_threads * nt):
        tlb_next[pool, n_pages] = n_pages
        tlb_prev[pool, n_pages] = n_pages

    line_ver = np.zeros(n_lines, dtype=np.int64)
    line_writer = np.full(n_lines, -1, dtype=np.int32)
    line_cas_end = np.zeros(n_lines, dtype=np.float64)
    line_cas_tid = np.full(n_lines, -1, dtype=np.int32)
    seen_ver = np.zeros((n_threads, n_lines), dtype=np.int64)

    # per-line statistics (measured phase only)
    touches = np.zeros(n_lines, dtype=np.int64)
    reads = np.zeros(n_lines, dtype=np.int64)
    served = np.zeros((n_lines, nd + 1), dtype=np.int64)  # level..., memory
    tlb_served = np.zeros((n_lines, nt + 1), dtype=np.int64)
    coh_misses = np.zeros(n_lines, dtype=np.int64)
    stall_events = np.zeros(n_lines, dtype=np.int64)
    stall_cycles = 0.0
    hist = np.zeros(4096, dtype=np.int64)

    max_path = 2 * (key_range + 2) + 8 * (h_max + 2) + 16
    path_slot = np.empty((n_threads, max_path), dtype=np.int64)
    path_flag = np.empty((n_threads, max_path), dtype=np.int8)
    path_len = np.zeros(n_threads, dtype=np.int64)
    path_pos = np.zeros(n_threads, dtype=np.int64)
    op_events = np.zeros(n_threads, dtype=np.int64)
    op_measured = np.zeros(n_threads, dtype=np.bool_)
    read_stamp = np.full(n_slots, -1, dtype=np.int64)
    cas_stamp = np.full(n_slots, -1, dtype=np.int64)
    preds = np.empty(h_max + 1, dtype=np.int64)

    t_now = np.zeros(n_threads, dtype=np.float64)
    ops_done = np.zeros(n_threads, dtype=np.int64)
    warm_end = np.zeros(n_threads, dtype=np.float64)
    active = np.ones(n_threads, dtype=np.bool_)
    total_ops = warmup_ops + measured_ops
    n_active = n_threads
    serial = 0
    charged = np.zeros(n_threads, dtype=np.float64)  # occupancy audit

    while n_active > 0:
        t = -1
        best = 1e300
        for i in range(n_threads):
            if active[i] and t_now[i] < best:
                best = t_now[i]
                t = i
        if path_pos[t] == path_len[t]:
            if op_measured[t]:
                count = path_len[t]
                if count >= len(hist):
                    count = len(hist) - 1
                hist[count] += 1
            if ops_done[t] == total_ops:
                active[t] = False
                n_active -= 1
                continue
            i_op = ops_done[t]
            if i_op == warmup_ops:
                warm_end[t] = t_now[t]
            seed = thread_seeds[t]
            u_key = _u01(_word(seed, i_op, 0))
            key = np.searchsorted(key_cdf, u_key, side="right") + 1
            u_kind = _u01(_word(seed, i_op, 1))
            if u_kind < ins_thresh[key]:
                kind = OP_INSERT
            elif u_kind < upd_thresh[key]:
                kind = OP_DELETE
            else:
                kind = OP_SEARCH
            if kind == OP_DELETE and no_delete[key]:
                kind = OP_SEARCH
            h_draw = 0
            if structure == SL and kind == OP_INSERT:
                u_h = _u01(_word(seed, i_op, 2))
                h_draw = np.searchsorted(height_cum, u_h, side="right")
                if h_draw > h_max:
                    h_draw = h_max
            serial += 1
            if structure == LL:
                n = _resolve_chain(chain_nxt, chain_key_of, chain_node_slot, 0,
                                   kind, key, path_slot[t], path_flag[t],
                                   read_stamp, cas_stamp, serial)
            elif structure == HT:
                head = bucket_head[(key - 1) // load_factor + 1]
                n = _resolve_chain(chain_nxt, chain_key_of, chain_node_slot, head,
                                   kind, key, path_slot[t], path_flag[t],
                                   read_stamp, cas_stamp, serial)
            elif structure == SL:
                n = _resolve_sl(sl_heights, sl_nxt, h_max, key_range, kind, key,
                                h_draw, preds, path_slot[t], path_flag[t],
                                read_stamp, cas_stamp, serial)
            else:
                n = _resolve_bst(bst_left, bst_right, key_range, kind, key,
                                 path_slot[t], path_flag[t],
                                 read_stamp, cas_stamp, serial)
            path_len[t] = n
            path_pos[t] = 0
            op_measured[t] = i_op >= warmup_ops
            ops_done[t] += 1
            t_now[t] += t_app
            charged[t] += t_app
            continue

        pos = path_pos[t]
        slot = path_slot[t, pos]
        is_cas = path_flag[t, pos] == CAS
        line = slot_to_line[slot]
        page = line_to_page[line]
        now = t_now[t]
        measured = op_measured[t]
        lat = 0.0

        # Stall behind another thread's in-flight CAS on this line; the
        # blocked window is the CAS execution itself at the end of its touch.
        if line_cas_tid[line] != t:
            cas_end = line_cas_end[line]
            if cas_end > now and now >= cas_end - t_cas:
                wait = cas_end - now
                lat += wait
                if measured:
                    stall_events[line] += 1
                    stall_cycles += wait

        # Coherence: a foreign modification since our last visit voids the
        # whole data hierarchy charge and costs the recovery penalty instead.
        coh = seen_ver[t, line] != line_ver[line] and line_writer[line] != t
        level_hit = -1
        for lvl in range(nd):
            pool = t * nd + lvl
            hit = _lru_touch(lru_next, lru_prev, lru_res, lru_counts, pool, line,
                             n_lines, data_caps[lvl])
            if hit and level_hit < 0:
                level_hit = lvl
        if coh:
            lat += t_rec
            if measured:
                coh_misses[line] += 1
        elif level_hit >= 0:
            lat += data_lat[level_hit]
        else:
            lat += mem_lat
        seen_ver[t, line] = line_ver[line]

        tlb_hit = -1
        for lvl in range(nt):
            pool = t * nt + lvl
            hit = _lru_touch(tlb_next, tlb_prev, tlb_res, tlb_counts, pool, page,
                             n_pages, tlb_caps[lvl])
            if hit and tlb_hit < 0:
                tlb_hit = lvl
        lat += tlb_lat[tlb_hit] if tlb_hit >= 0 else walk_lat

        lat += t_cmp
        if is_cas:
            lat += t_cas
            line_ver[line] += 1
            line_writer[line] = t
            seen_ver[t, line] = line_ver[line]
            line_cas_end[line] = now + lat
            line_cas_tid[line] = t

        if measured:
            touches[line] += 1
            if not is_cas:
                reads[line] += 1
                idx = tracked_of_line[line]
                if idx >= 0 and track_counts[idx] < track_times.shape[1]:
                    track_times[idx, track_counts[idx]] = now
                    track_counts[idx] += 1
            if coh:
                pass
            elif level_hit >= 0:
                served[line, level_hit] += 1
            else:
                served[line, nd] += 1
            if tlb_hit >= 0:
                tlb_served[line, tlb_hit] += 1
            else:
                tlb_served[line, nt] += 1

        t_now[t] += lat
        charged[t] += lat
        path_pos[t] = pos + 1

    warm_time = 0.0
    end_time = 0.0
    for i in range(n_threads):
        if warm_end[i] > warm_time:
            warm_time = warm_end[i]
        if t_now[i] > end_time:
            end_time = t_now[i]
    return (end_time, warm_time, touches, reads, served, tlb_served, coh_misses,
            stall_events, stall_cycles, hist, t_now, charged)
