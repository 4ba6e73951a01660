"""Plain-Python rotor walk used as an independent oracle for the kernels."""


def reference_walk(g, rotor, a, cap=100_000):
    rotor = list(rotor)
    slots = [g.slots(v) for v in range(g.n_active)]
    traj, configs = [a], [tuple(rotor)]
    x = a
    for _ in range(cap):
        rotor[x] = (rotor[x] + 1) % len(slots[x])
        y = slots[x][rotor[x]]
        configs.append(tuple(rotor))
        if y < 0:
            return traj, configs, y
        traj.append(y)
        x = y
    raise RuntimeError("no termination")


def reference_escapes(g, rotor, a, n):
    rotor = list(rotor)
    slots = [g.slots(v) for v in range(g.n_active)]
    escaped = 0
    for _ in range(n):
        x = a
        while True:
            rotor[x] = (rotor[x] + 1) % len(slots[x])
            y = slots[x][rotor[x]]
            if y < 0:
                escaped += 1
                break
            if y == a:
                break
            x = y
    return escaped, rotor
