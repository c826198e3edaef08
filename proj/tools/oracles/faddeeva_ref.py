"""Reference values of the Faddeeva function and its derivatives (mpmath, 80 digits)."""
import csv
import random
import sys

import mpmath as mp

mp.mp.dps = 80


def derivs(z, kmax):
    w = mp.exp(-z * z) * mp.erfc(-1j * z)
    out = [w, -2 * z * w + 2j / mp.sqrt(mp.pi)]
    for k in range(1, kmax):
        out.append(-2 * z * out[k] - 2 * k * out[k - 1])
    return out[: kmax + 1]


def main(path):
    rng = random.Random(20240611)
    pts = []
    for _ in range(300):
        pts.append(complex(rng.uniform(-9, 9), rng.uniform(0, 9)))
    for _ in range(100):
        pts.append(complex(rng.uniform(-12, 12), 0.0))
    for _ in range(100):
        pts.append(complex(rng.uniform(-12, 12), rng.uniform(0, 0.05)))
    for _ in range(60):
        r = 10 ** rng.uniform(0.5, 3)
        a = rng.uniform(0, 3.14159)
        pts.append(complex(r * mp.cos(a), r * mp.sin(a)))
    pts += [0j, 1j, 7.99 + 0j, 8.01 + 0j, 5.6 + 5.7j]
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["re", "im", "k", "w_re", "w_im"])
        for z in pts:
            zz = mp.mpc(z.real, z.imag)
            for k, v in enumerate(derivs(zz, 8)):
                wr.writerow([repr(z.real), repr(z.imag), k, mp.nstr(v.real, 20), mp.nstr(v.imag, 20)])


if __name__ == "__main__":
    main(sys.argv[1])
