"""Worst defect of the cap construction over random matrices, per epsilon and dimension."""
import numpy as np

from eigabsorb.numrange import cap_check


def main(seed: int = 0):
    rng = np.random.default_rng(seed)
    print("dim,epsilon,max_defect_over_norm,min_overlap")
    for n in (2, 5, 20):
        for eps in (0.05, 0.3, 0.9):
            worst, overlap = 0.0, 1.0
            for _ in range(10):
                T = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
                x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
                x /= np.linalg.norm(x)
                r = cap_check(T, x, eps, 50, rng)
                worst = max(worst, r.max_defect / np.linalg.norm(T, 2))
                overlap = min(overlap, r.min_overlap)
            print(f"{n},{eps},{worst:.2e},{overlap:.4f}")


if __name__ == "__main__":
    main()
