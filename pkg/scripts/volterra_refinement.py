"""Eigenvalue error of the discretized Volterra family under mesh refinement.

Usage: python scripts/volterra_refinement.py [--theta 0.5] [--dims 128,256,512,1024]
"""
import argparse

from eigabsorb.casebook import volterra_verify


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--dims", default="128,256,512,1024")
    args = p.parse_args()
    print("N,max_rel_error,kernel_rank,max_compression_error")
    for N in (int(s) for s in args.dims.split(",")):
        r = volterra_verify(N, args.theta)
        print(f"{N},{r.max_rel_error:.3e},{r.kernel_rank},{r.max_compression_error:.3e}")


if __name__ == "__main__":
    main()
