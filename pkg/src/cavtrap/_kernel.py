"""Compiled inner loop of the stochastic trajectory integrator.

One kernel call advances a single trajectory through a chunk of time steps
using pre-drawn standard normals (dynamics) and per-window detection draws,
so results are bit-reproducible and independent of chunking.  The update is a
kick-drift-kick splitting of the momentum-velocity system with the stochastic
momentum kicks applied once per step with covariance 2 D dt; plain
Euler-Maruyama is unstable for the stiff axial oscillation at the default
step (see the step-splitting note in trajectory.py).

State conventions: position um, momentum in hbar*k units, time us.

fstate: [x, y, z, qx, qy, qz, winsum, acc]
istate: [step, hint, drive, latched, switch_at, ring_pos, ring_filled,
         rec_count, trigger_step, status]
status: 0 running, 1 radial exit, 2 axial exit, 3 max time.
"""

import numpy as np
from numba import njit

STEP, HINT, DRIVE, LATCHED, SWITCH_AT, RING_POS, RING_FILLED, REC_COUNT, \
    TRIGGER_STEP, STATUS = range(10)

ST_RUNNING, ST_RADIAL, ST_AXIAL, ST_MAXTIME = 0, 1, 2, 3
TRIG_NONE, TRIG_HETERODYNE, TRIG_COUNTING = 0, 1, 2


@njit(cache=True)
def _poisson_inv(u, lam):
    """Poisson sample by CDF inversion of a uniform draw."""
    if lam <= 0.0:
        return 0
    p = np.exp(-lam)
    cdf = p
    k = 0
    kmax = int(lam + 20.0 * np.sqrt(lam) + 20.0)
    while u > cdf and k < kmax:
        k += 1
        p *= lam / k
        cdf += p
    return k


@njit(cache=True)
def _interp(grid, cols, u, hint):
    """Linear interpolation of the 7 table columns, walking from hint."""
    n = grid.shape[0]
    i = hint
    if i < 0:
        i = 0
    elif i > n - 2:
        i = n - 2
    while i + 1 < n - 1 and u > grid[i + 1]:
        i += 1
    while i > 0 and u < grid[i]:
        i -= 1
    f = (u - grid[i]) / (grid[i + 1] - grid[i])
    c0 = cols[i, 0] + f * (cols[i + 1, 0] - cols[i, 0])
    c1 = cols[i, 1] + f * (cols[i + 1, 1] - cols[i, 1])
    c2 = cols[i, 2] + f * (cols[i + 1, 2] - cols[i, 2])
    c3 = cols[i, 3] + f * (cols[i + 1, 3] - cols[i, 3])
    c4 = cols[i, 4] + f * (cols[i + 1, 4] - cols[i, 4])
    c5 = cols[i, 5] + f * (cols[i + 1, 5] - cols[i, 5])
    c6 = cols[i, 6] + f * (cols[i + 1, 6] - cols[i, 6])
    return c0, c1, c2, c3, c4, c5, c6, i


@njit(cache=True)
def run_chunk(fstate, istate, win, rec, znorm, det,
              grid_p, cols_p, grid_t, cols_t,
              g0, k, m_t, w0, gamma, se_x, se_y, se_z,
              dt, rec_every, n_steps_max, is_last_chunk,
              trig_mode, w_steps, threshold, delay_steps,
              sigma_ref, s_ref, count_rate,
              rho_exit2, x_bound,
              mean_on, fric_sign, cav_on, rec_on, freeze, nz,
              frozen):
    """Advance one trajectory by up to znorm.shape[0] // nz steps."""
    x = fstate[0]; y = fstate[1]; z = fstate[2]
    qx = fstate[3]; qy = fstate[4]; qz = fstate[5]
    winsum = fstate[6]; acc = fstate[7]
    hint = istate[HINT]
    drive = istate[DRIVE]
    latched = istate[LATCHED]
    switch_at = istate[SWITCH_AT]
    ring_pos = istate[RING_POS]
    ring_filled = istate[RING_FILLED]
    rec_count = istate[REC_COUNT]
    n0 = istate[STEP]
    status = ST_RUNNING

    w0inv2 = 1.0 / (w0 * w0)
    vf = k / m_t
    zsc = 1.0 / np.sqrt(nz)
    n_chunk = znorm.shape[0] // nz

    # evaluate geometry and coefficients at the current position; freeze mode
    # pins the entire coefficient set including the mode gradient
    if freeze == 1:
        mphi = frozen[0]; xi = frozen[1]; chi = frozen[2]; pop = frozen[3]
        rea = frozen[4]; ima = frozen[5]; nb = frozen[6]
        dpx = frozen[7]; dpy = frozen[8]; dpz = frozen[9]
        sgn = frozen[10]; psi = frozen[11]
    else:
        env = np.exp(-(y * y + z * z) * w0inv2)
        cx = np.cos(k * x)
        psi = cx * env
        dpx = -k * np.sin(k * x) * env
        dpy = -2.0 * y * w0inv2 * psi
        dpz = -2.0 * z * w0inv2 * psi
        sgn = 1.0 if psi >= 0.0 else -1.0
        u = g0 * (psi if psi >= 0.0 else -psi)
        if drive == 0:
            mphi, xi, chi, pop, rea, ima, nb, hint = _interp(grid_p, cols_p, u, hint)
        else:
            mphi, xi, chi, pop, rea, ima, nb, hint = _interp(grid_t, cols_t, u, hint)

    j = 0
    for j in range(n_chunk):
        n = n0 + j
        if n % rec_every == 0:
            rec[rec_count, 0] = n * dt
            rec[rec_count, 1] = x; rec[rec_count, 2] = y; rec[rec_count, 3] = z
            rec[rec_count, 4] = qx; rec[rec_count, 5] = qy; rec[rec_count, 6] = qz
            rec[rec_count, 7] = g0 * psi
            rec[rec_count, 8] = nb
            rec[rec_count, 9] = rea; rec[rec_count, 10] = ima
            rec[rec_count, 11] = pop
            rec[rec_count, 12] = drive
            rec_count += 1

        # detection / trigger
        if trig_mode == TRIG_HETERODYNE and latched == 0:
            obs = rea * rea + ima * ima
            if ring_filled < w_steps:
                win[ring_pos] = obs
                winsum += obs
                ring_filled += 1
            else:
                winsum += obs - win[ring_pos]
                win[ring_pos] = obs
            ring_pos += 1
            if ring_pos == w_steps:
                ring_pos = 0
            if ring_filled == w_steps:
                avg = winsum / w_steps
                base = avg if avg > 0.0 else 0.0
                sig = sigma_ref * np.sqrt(base / s_ref)
                if avg + sig * det[n // w_steps] >= threshold:
                    latched = 1
                    istate[TRIGGER_STEP] = n
                    switch_at = n + delay_steps
        elif trig_mode == TRIG_COUNTING:
            if latched == 0:
                acc += nb * dt
                if (n + 1) % w_steps == 0:
                    lam = count_rate * acc
                    counts = _poisson_inv(det[n // w_steps], lam)
                    level = counts / (count_rate * w_steps * dt)
                    if level >= threshold:
                        latched = 1
                        istate[TRIGGER_STEP] = n
                        switch_at = n + delay_steps
                    acc = 0.0

        # first half kick at x_n
        qd = qx * dpx + qy * dpy + qz * dpz
        cm = mean_on * (g0 / k) * sgn * mphi
        cf = fric_sign * (g0 * g0 / m_t) * chi * qd
        qx -= 0.5 * dt * (cm * dpx + cf * dpx)
        qy -= 0.5 * dt * (cm * dpy + cf * dpy)
        qz -= 0.5 * dt * (cm * dpz + cf * dpz)

        # drift
        x += dt * vf * qx
        y += dt * vf * qy
        z += dt * vf * qz

        if latched == 1 and drive == 0 and n + 1 > switch_at:
            drive = 1

        # evaluate at the new position
        if freeze == 0:
            env = np.exp(-(y * y + z * z) * w0inv2)
            cx = np.cos(k * x)
            psi = cx * env
            dpx = -k * np.sin(k * x) * env
            dpy = -2.0 * y * w0inv2 * psi
            dpz = -2.0 * z * w0inv2 * psi
            sgn = 1.0 if psi >= 0.0 else -1.0
            u = g0 * (psi if psi >= 0.0 else -psi)
            if drive == 0:
                mphi, xi, chi, pop, rea, ima, nb, hint = _interp(grid_p, cols_p, u, hint)
            else:
                mphi, xi, chi, pop, rea, ima, nb, hint = _interp(grid_t, cols_t, u, hint)

        # second half kick plus noise at x_{n+1}
        qd = qx * dpx + qy * dpy + qz * dpz
        cm = mean_on * (g0 / k) * sgn * mphi
        cf = fric_sign * (g0 * g0 / m_t) * chi * qd
        qx -= 0.5 * dt * (cm * dpx + cf * dpx)
        qy -= 0.5 * dt * (cm * dpy + cf * dpy)
        qz -= 0.5 * dt * (cm * dpz + cf * dpz)

        base = j * nz
        z1 = znorm[base, 0]
        z2 = znorm[base, 1]
        z3 = znorm[base, 2]
        z4 = znorm[base, 3]
        if nz == 2:
            z1 = (z1 + znorm[base + 1, 0]) * zsc
            z2 = (z2 + znorm[base + 1, 1]) * zsc
            z3 = (z3 + znorm[base + 1, 2]) * zsc
            z4 = (z4 + znorm[base + 1, 3]) * zsc
        xi_c = xi if xi > 0.0 else 0.0
        pop_c = pop if pop > 0.0 else 0.0
        amp_cav = cav_on * (g0 / k) * np.sqrt(2.0 * xi_c * dt)
        amp_rec = rec_on * np.sqrt(2.0 * gamma * pop_c * dt)
        qx += amp_cav * dpx * z1 + amp_rec * se_x * z2
        qy += amp_cav * dpy * z1 + amp_rec * se_y * z3
        qz += amp_cav * dpz * z1 + amp_rec * se_z * z4

        # termination checks at record instants only (keeps the grid uniform)
        if (n + 1) % rec_every == 0:
            rho2 = y * y + z * z
            exit_r = rho2 > rho_exit2 * (1.0 + 1e-12)
            exit_a = (x > x_bound) or (x < -x_bound)
            if exit_r or exit_a:
                rec[rec_count, 0] = (n + 1) * dt
                rec[rec_count, 1] = x; rec[rec_count, 2] = y; rec[rec_count, 3] = z
                rec[rec_count, 4] = qx; rec[rec_count, 5] = qy; rec[rec_count, 6] = qz
                rec[rec_count, 7] = g0 * psi
                rec[rec_count, 8] = nb
                rec[rec_count, 9] = rea; rec[rec_count, 10] = ima
                rec[rec_count, 11] = pop
                rec[rec_count, 12] = drive
                rec_count += 1
                status = ST_RADIAL if exit_r else ST_AXIAL
                n0 = n + 1 - j  # so that final step count is n + 1
                break

    if status == ST_RUNNING:
        n_done = n0 + n_chunk
        if is_last_chunk == 1 and n_done >= n_steps_max:
            rec[rec_count, 0] = n_done * dt
            rec[rec_count, 1] = x; rec[rec_count, 2] = y; rec[rec_count, 3] = z
            rec[rec_count, 4] = qx; rec[rec_count, 5] = qy; rec[rec_count, 6] = qz
            rec[rec_count, 7] = g0 * psi
            rec[rec_count, 8] = nb
            rec[rec_count, 9] = rea; rec[rec_count, 10] = ima
            rec[rec_count, 11] = pop
            rec[rec_count, 12] = drive
            rec_count += 1
            status = ST_MAXTIME
    else:
        n_done = n0 + j  # loop broke at step n + 1

    fstate[0] = x; fstate[1] = y; fstate[2] = z
    fstate[3] = qx; fstate[4] = qy; fstate[5] = qz
    fstate[6] = winsum; fstate[7] = acc
    istate[HINT] = hint
    istate[DRIVE] = drive
    istate[LATCHED] = latched
    istate[SWITCH_AT] = switch_at
    istate[RING_POS] = ring_pos
    istate[RING_FILLED] = ring_filled
    istate[REC_COUNT] = rec_count
    istate[STEP] = n_done
    istate[STATUS] = status
    return status
