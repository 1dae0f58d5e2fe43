"""Sign pattern of f_a - f_b at the probes -e^{-m^2} and the located crossings.

Usage: python scripts/example62_crossings.py [--probes 5,7,...,25]
"""
import argparse
import math

from eigabsorb.casebook import example62_models
from eigabsorb.secular import crossing_locate, crossing_scan


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--probes", default=",".join(str(m) for m in range(5, 27, 2)))
    args = p.parse_args()
    ms = [int(s) for s in args.probes.split(",")]
    a, b = example62_models()
    rows = crossing_scan(a, b, ms)
    print("m,lambda_probe,sign,bounds_ok")
    for r in rows:
        print(f"{r.m},{r.lambda_probe:.6e},{r.sign:+d},{int(r.bound_a_ok and r.bound_b_ok)}")
    print("lo,hi,lambda_star,t_star,mismatch")
    for lo, hi in zip(ms, ms[1:]):
        c = crossing_locate(a, b, (-math.exp(-lo * lo), -math.exp(-hi * hi)))
        print(f"{lo},{hi},{c.lambda_star:.6e},{c.t_star:.6e},{c.mismatch:.2e}")


if __name__ == "__main__":
    main()
