"""Numba kernels for the two hot loops: ray casting and depth integration.

Obstacle geometry is packed into flat arrays by the world module:
kind codes 0=box, 1=sphere, 2=cylinder; `cy`/`sy` hold cos/sin of each
obstacle's yaw. Voxel states are 0=unknown, 1=free, 2=occupied.
"""

import numpy as np
from numba import njit

BIG = 1.0e30


@njit(cache=True)
def _ray_box(ox, oy, oz, dx, dy, dz, cx, cy_, cz, hx, hy, hz, c, s):
    # rotate into the box frame (yaw only)
    rx = ox - cx
    ry = oy - cy_
    rz = oz - cz
    lox = c * rx + s * ry
    loy = -s * rx + c * ry
    loz = rz
    ldx = c * dx + s * dy
    ldy = -s * dx + c * dy
    ldz = dz
    tmin = -BIG
    tmax = BIG
    for o, d, h in ((lox, ldx, hx), (loy, ldy, hy), (loz, ldz, hz)):
        if abs(d) < 1e-15:
            if o < -h or o > h:
                return BIG
        else:
            t1 = (-h - o) / d
            t2 = (h - o) / d
            if t1 > t2:
                t1, t2 = t2, t1
            if t1 > tmin:
                tmin = t1
            if t2 < tmax:
                tmax = t2
    if tmax < tmin or tmax < 0.0:
        return BIG
    if tmin > 0.0:
        return tmin
    return tmax


@njit(cache=True)
def _ray_sphere(ox, oy, oz, dx, dy, dz, cx, cy_, cz, r):
    rx = ox - cx
    ry = oy - cy_
    rz = oz - cz
    b = rx * dx + ry * dy + rz * dz
    cq = rx * rx + ry * ry + rz * rz - r * r
    disc = b * b - cq
    if disc < 0.0:
        return BIG
    sq = np.sqrt(disc)
    t1 = -b - sq
    t2 = -b + sq
    if t1 > 0.0:
        return t1
    if t2 > 0.0:
        return t2
    return BIG


@njit(cache=True)
def _ray_cylinder(ox, oy, oz, dx, dy, dz, cx, cy_, cz, r, hz):
    # vertical axis through (cx, cy_, cz), radius r, half height hz
    rx = ox - cx
    ry = oy - cy_
    rz = oz - cz
    best = BIG
    a = dx * dx + dy * dy
    if a > 1e-15:
        b = rx * dx + ry * dy
        cq = rx * rx + ry * ry - r * r
        disc = b * b - a * cq
        if disc >= 0.0:
            sq = np.sqrt(disc)
            for t in ((-b - sq) / a, (-b + sq) / a):
                if t > 0.0 and t < best:
                    z = rz + t * dz
                    if -hz <= z <= hz:
                        best = t
    if abs(dz) > 1e-15:
        for zface in (-hz, hz):
            t = (zface - rz) / dz
            if t > 0.0 and t < best:
                x = rx + t * dx
                y = ry + t * dy
                if x * x + y * y <= r * r:
                    best = t
    return best


@njit(cache=True)
def _ray_bounds(ox, oy, oz, dx, dy, dz, bminx, bminy, bminz,
                bmaxx, bmaxy, bmaxz):
    # solid enclosure: entry face if outside, exit face if inside
    tmin = -BIG
    tmax = BIG
    for o, d, lo, hi in ((ox, dx, bminx, bmaxx), (oy, dy, bminy, bmaxy),
                         (oz, dz, bminz, bmaxz)):
        if abs(d) < 1e-15:
            if o < lo or o > hi:
                return BIG
        else:
            t1 = (lo - o) / d
            t2 = (hi - o) / d
            if t1 > t2:
                t1, t2 = t2, t1
            if t1 > tmin:
                tmin = t1
            if t2 < tmax:
                tmax = t2
    if tmax < tmin or tmax < 0.0:
        return BIG
    if tmin > 0.0:
        return tmin
    return tmax


@njit(cache=True)
def step_physics(state, cmd, tau_v, tau_w, mass, wrenches, dt, gravity,
                 tilt_cap):
    """Advance [px,py,pz, qw,qx,qy,qz, vx,vy,vz(body), wz] through one
    substep per wrench row. Mirrors vehicle.step_dynamics exactly."""
    px, py, pz = state[0], state[1], state[2]
    qw, qx, qy, qz = state[3], state[4], state[5], state[6]
    vbx, vby, vbz = state[7], state[8], state[9]
    wz = state[10]
    for i in range(wrenches.shape[0]):
        yaw = np.arctan2(2 * (qw * qz + qx * qy),
                         1 - 2 * (qy * qy + qz * qz))
        # body -> world rotation applied to body velocity
        r00 = 1 - 2 * (qy * qy + qz * qz)
        r01 = 2 * (qx * qy - qw * qz)
        r02 = 2 * (qx * qz + qw * qy)
        r10 = 2 * (qx * qy + qw * qz)
        r11 = 1 - 2 * (qx * qx + qz * qz)
        r12 = 2 * (qy * qz - qw * qx)
        r20 = 2 * (qx * qz - qw * qy)
        r21 = 2 * (qy * qz + qw * qx)
        r22 = 1 - 2 * (qx * qx + qy * qy)
        vwx = r00 * vbx + r01 * vby + r02 * vbz
        vwy = r10 * vbx + r11 * vby + r12 * vbz
        vwz = r20 * vbx + r21 * vby + r22 * vbz
        cyaw = np.cos(yaw)
        syaw = np.sin(yaw)
        vvx = cyaw * vwx + syaw * vwy
        vvy = -syaw * vwx + cyaw * vwy
        vvz = vwz

        alpha_v = 1.0 - np.exp(-dt / tau_v)
        atx = (cmd[0] - vvx) / tau_v
        aty = (cmd[1] - vvy) / tau_v
        vvx = vvx + alpha_v * (cmd[0] - vvx)
        vvy = vvy + alpha_v * (cmd[1] - vvy)
        vvz = vvz + alpha_v * (cmd[2] - vvz)
        fx, fy, fz = wrenches[i, 0], wrenches[i, 1], wrenches[i, 2]
        vvx = vvx + (cyaw * fx + syaw * fy) * (dt / mass)
        vvy = vvy + (-syaw * fx + cyaw * fy) * (dt / mass)
        vvz = vvz + fz * (dt / mass)

        alpha_w = 1.0 - np.exp(-dt / tau_w)
        wz = wz + alpha_w * (cmd[3] - wz)
        wz = wz + wrenches[i, 5] * dt
        yaw = yaw + wz * dt

        pitch = np.arctan2(atx, gravity)
        if pitch > tilt_cap:
            pitch = tilt_cap
        elif pitch < -tilt_cap:
            pitch = -tilt_cap
        roll = np.arctan2(-aty, gravity)
        if roll > tilt_cap:
            roll = tilt_cap
        elif roll < -tilt_cap:
            roll = -tilt_cap

        cy2, sy2 = np.cos(yaw / 2), np.sin(yaw / 2)
        cp2, sp2 = np.cos(pitch / 2), np.sin(pitch / 2)
        cr2, sr2 = np.cos(roll / 2), np.sin(roll / 2)
        qw = cy2 * cp2 * cr2 + sy2 * sp2 * sr2
        qx = cy2 * cp2 * sr2 - sy2 * sp2 * cr2
        qy = cy2 * sp2 * cr2 + sy2 * cp2 * sr2
        qz = sy2 * cp2 * cr2 - cy2 * sp2 * sr2
        norm = np.sqrt(qw * qw + qx * qx + qy * qy + qz * qz)
        qw, qx, qy, qz = qw / norm, qx / norm, qy / norm, qz / norm

        # position integrates the pre-rotation vehicle frame velocity;
        # the stored velocity is carried with the rotated frame
        px = px + (cyaw * vvx - syaw * vvy) * dt
        py = py + (syaw * vvx + cyaw * vvy) * dt
        pz = pz + vvz * dt
        cyaw = np.cos(yaw)
        syaw = np.sin(yaw)
        vwx = cyaw * vvx - syaw * vvy
        vwy = syaw * vvx + cyaw * vvy
        vwz = vvz
        # world -> body: transpose of the rotation built from the new quat
        r00 = 1 - 2 * (qy * qy + qz * qz)
        r01 = 2 * (qx * qy - qw * qz)
        r02 = 2 * (qx * qz + qw * qy)
        r10 = 2 * (qx * qy + qw * qz)
        r11 = 1 - 2 * (qx * qx + qz * qz)
        r12 = 2 * (qy * qz - qw * qx)
        r20 = 2 * (qx * qz - qw * qy)
        r21 = 2 * (qy * qz + qw * qx)
        r22 = 1 - 2 * (qx * qx + qy * qy)
        vbx = r00 * vwx + r10 * vwy + r20 * vwz
        vby = r01 * vwx + r11 * vwy + r21 * vwz
        vbz = r02 * vwx + r12 * vwy + r22 * vwz
    state[0], state[1], state[2] = px, py, pz
    state[3], state[4], state[5], state[6] = qw, qx, qy, qz
    state[7], state[8], state[9] = vbx, vby, vbz
    state[10] = wz


@njit(cache=True)
def cast_rays(origin, dirs, bmin, bmax, kinds, centers, halfs, cy, sy,
              max_range, out_t):
    """First surface hit per ray; BIG when nothing within max_range."""
    n = dirs.shape[0]
    k = kinds.shape[0]
    ox, oy, oz = origin[0], origin[1], origin[2]
    for i in range(n):
        dx, dy, dz = dirs[i, 0], dirs[i, 1], dirs[i, 2]
        best = _ray_bounds(ox, oy, oz, dx, dy, dz, bmin[0], bmin[1], bmin[2],
                           bmax[0], bmax[1], bmax[2])
        for j in range(k):
            if kinds[j] == 0:
                t = _ray_box(ox, oy, oz, dx, dy, dz, centers[j, 0],
                             centers[j, 1], centers[j, 2], halfs[j, 0],
                             halfs[j, 1], halfs[j, 2], cy[j], sy[j])
            elif kinds[j] == 1:
                t = _ray_sphere(ox, oy, oz, dx, dy, dz, centers[j, 0],
                                centers[j, 1], centers[j, 2], halfs[j, 0])
            else:
                t = _ray_cylinder(ox, oy, oz, dx, dy, dz, centers[j, 0],
                                  centers[j, 1], centers[j, 2], halfs[j, 0],
                                  halfs[j, 2])
            if t < best:
                best = t
        if best > max_range:
            best = BIG
        out_t[i] = best


@njit(cache=True)
def integrate_rays(states, counts, gorigin, res, origin, dirs, depths, valid,
                   d_m):
    """Carve free space and mark hit voxels along depth rays.

    Incremental voxel walk per ray up to min(depth, d_m); the hit voxel is
    marked occupied only when the hit lies within d_m. Free marking applies
    to unknown voxels only, so occupied is never downgraded. Returns the
    number of voxels leaving the unknown state.
    """
    nx, ny, nz = states.shape
    transitions = 0
    for i in range(depths.shape[0]):
        if not valid[i]:
            continue
        depth = depths[i]
        reach = depth if depth < d_m else d_m
        hit = depth <= d_m
        dx, dy, dz = dirs[i, 0], dirs[i, 1], dirs[i, 2]
        ox = origin[0] - gorigin[0]
        oy = origin[1] - gorigin[1]
        oz = origin[2] - gorigin[2]

        # hit voxel index (world point may sit on the boundary plane; nudge
        # back along the ray so wall hits land in the interior voxel)
        hx = hy = hz = -1
        if hit:
            eps = 1e-6
            px = ox + (depth - eps) * dx
            py = oy + (depth - eps) * dy
            pz = oz + (depth - eps) * dz
            hx = int(np.floor(px / res))
            hy = int(np.floor(py / res))
            hz = int(np.floor(pz / res))

        # clip the walk to the grid box
        t = 0.0
        t_end = reach
        for o, d, hi in ((ox, dx, nx * res), (oy, dy, ny * res),
                         (oz, dz, nz * res)):
            if abs(d) < 1e-15:
                if o < 0.0 or o > hi:
                    t = BIG
            else:
                t1 = (0.0 - o) / d
                t2 = (hi - o) / d
                if t1 > t2:
                    t1, t2 = t2, t1
                if t1 > t:
                    t = t1
                if t2 < t_end:
                    t_end = t2
        if t >= t_end:
            # ray never inside the grid; still try the hit voxel
            t = BIG
        else:
            t += 1e-9
            vx = int(np.floor((ox + t * dx) / res))
            vy = int(np.floor((oy + t * dy) / res))
            vz = int(np.floor((oz + t * dz) / res))
            stepx = 1 if dx > 0 else -1
            stepy = 1 if dy > 0 else -1
            stepz = 1 if dz > 0 else -1
            tmaxx = BIG if dx == 0 else ((vx + (stepx > 0)) * res - ox) / dx
            tmaxy = BIG if dy == 0 else ((vy + (stepy > 0)) * res - oy) / dy
            tmaxz = BIG if dz == 0 else ((vz + (stepz > 0)) * res - oz) / dz
            tdx = BIG if dx == 0 else res / abs(dx)
            tdy = BIG if dy == 0 else res / abs(dy)
            tdz = BIG if dz == 0 else res / abs(dz)
            while True:
                if vx < 0 or vx >= nx or vy < 0 or vy >= ny \
                        or vz < 0 or vz >= nz:
                    break
                if vx == hx and vy == hy and vz == hz:
                    break
                if states[vx, vy, vz] == 0:
                    states[vx, vy, vz] = 1
                    counts[0] -= 1
                    counts[1] += 1
                    transitions += 1
                if tmaxx < tmaxy:
                    if tmaxx < tmaxz:
                        if tmaxx > t_end:
                            break
                        vx += stepx
                        tmaxx += tdx
                    else:
                        if tmaxz > t_end:
                            break
                        vz += stepz
                        tmaxz += tdz
                else:
                    if tmaxy < tmaxz:
                        if tmaxy > t_end:
                            break
                        vy += stepy
                        tmaxy += tdy
                    else:
                        if tmaxz > t_end:
                            break
                        vz += stepz
                        tmaxz += tdz

        if hit and 0 <= hx < nx and 0 <= hy < ny and 0 <= hz < nz:
            st = states[hx, hy, hz]
            if st != 2:
                if st == 0:
                    counts[0] -= 1
                    transitions += 1
                else:
                    counts[1] -= 1
                counts[2] += 1
                states[hx, hy, hz] = 2
    return transitions
