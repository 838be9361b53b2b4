#!/usr/bin/env python3
"""
Full Verification Runner for tanpq

This script runs every verification suite over the standard table of
(p, q) pairs:
1. Checks the symmetry laws and multiplier consistency.
2. Checks the period-1 structure, its boundary locus and its buds.
3. Checks separating rays, virtual centers and bounded components.
4. Prints a summary and writes certificates to the output directory.

Usage:
    python run_full_verification.py [--pairs 1,1;2,3] [--out-dir certificates] [--resolution 400]
"""

import os
import sys
import argparse
import time
from datetime import datetime
from dotenv import load_dotenv

# --- SETUP AND IMPORTS ---

load_dotenv(os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", ".env"))

current_dir = os.path.dirname(os.path.abspath(__file__))
project_root = os.path.abspath(os.path.join(current_dir, os.pardir))
sys.path.insert(0, os.path.join(project_root, "src"))

try:
    from tanpq.core.config import DEFAULT_RESOLUTION, configure_logging, env_threads
    from tanpq.core.family import FamilyParams
    from tanpq.lab.certificates import all_passed
    from tanpq.lab.suites import run_suite
    from tanpq.render.plane import set_threads
except ImportError as e:
    print(f"Import error: {e}")
    print("Please install the package requirements (pip install -r requirements.txt).")
    sys.exit(1)

DEFAULT_PAIRS = [(1, 1), (2, 1), (1, 2), (2, 3)]

PHASES = [
    ("SYMMETRIES AND MULTIPLIERS", ["symmetries", "multipliers"]),
    ("PERIOD-1 STRUCTURE", ["s1-structure", "s1-boundary", "parabolic-buds"]),
    ("RAYS, CENTERS AND BOUNDEDNESS", ["separating-rays", "centers", "s2-bounded", "capture-bounded"]),
]


class VerificationRunner:
    """
    Runs the suite phases for each (p, q) pair and keeps the certificates.
    """

    def __init__(self, pairs, out_dir=None, resolution=DEFAULT_RESOLUTION):
        self.pairs = pairs
        self.out_dir = out_dir
        self.resolution = resolution
        self.results = {}
        self.start_time = datetime.now()

        print("Initializing tanpq Verification Runner")
        print(f"Started at: {self.start_time.strftime('%Y-%m-%d %H:%M:%S')}")
        print(f"Pairs: {', '.join(f'({p},{q})' for p, q in pairs)}")
        print(f"Workers: {set_threads(env_threads())}")
        print("-" * 60)

    def run_phase(self, index, title, suites):
        print("\n" + "=" * 60)
        print(f"PHASE {index}: {title}")
        print("=" * 60)

        ok = True
        for p, q in self.pairs:
            params = FamilyParams(p=p, q=q)
            out_dir = os.path.join(self.out_dir, f"p{p}_q{q}") if self.out_dir else None
            tic = time.perf_counter()
            certificates = run_suite(params, suites, out_dir=out_dir, resolution=self.resolution)
            self.results.setdefault((p, q), []).extend(certificates)
            for cert in certificates:
                status = "INCONCLUSIVE" if cert.inconclusive else ("PASS" if cert.passed else "FAIL")
                print(f"  {str(params):<14} {cert.name:<18} {status}")
            print(f"  {params} finished in {time.perf_counter() - tic:.1f}s")
            ok = ok and all_passed(certificates)
        return ok

    def generate_summary_report(self):
        print("\n" + "=" * 60)
        print("VERIFICATION SUMMARY")
        print("=" * 60)

        duration = datetime.now() - self.start_time
        print(f"Execution Time: {str(duration).split('.')[0]}")
        for (p, q), certificates in self.results.items():
            passed = sum(1 for c in certificates if c.passed)
            print(f"   (p={p}, q={q}): {passed}/{len(certificates)} suites passed")
            for cert in certificates:
                if not cert.passed:
                    detail = cert.error or ", ".join(m.label for m in cert.failures())
                    print(f"      {cert.name}: {detail}")
        if self.out_dir:
            print(f"\nCertificates written to {self.out_dir}")
        print("\n" + "=" * 60)

    def run_all(self):
        success = True
        for index, (title, suites) in enumerate(PHASES, start=1):
            success = self.run_phase(index, title, suites) and success
        self.generate_summary_report()
        print("\nAll suites passed!" if success else "\nVerification completed with failures.")
        return success


def parse_pairs(text):
    pairs = []
    for item in text.split(";"):
        p, q = (int(x) for x in item.split(","))
        pairs.append((p, q))
    return pairs


def main():
    parser = argparse.ArgumentParser(description="tanpq Full Verification Runner")
    parser.add_argument(
        "--pairs",
        type=str,
        help="Semicolon-separated p,q pairs (e.g., 1,1;2,3)",
    )
    parser.add_argument("--out-dir", type=str, default=None, help="Directory for certificates")
    parser.add_argument("--resolution", type=int, default=DEFAULT_RESOLUTION, help="Grid resolution for plane checks")
    args = parser.parse_args()

    configure_logging()
    pairs = parse_pairs(args.pairs) if args.pairs else DEFAULT_PAIRS
    runner = VerificationRunner(pairs, out_dir=args.out_dir, resolution=args.resolution)
    try:
        success = runner.run_all()
    except KeyboardInterrupt:
        print("\nVerification interrupted by user.")
        success = False
    sys.exit(0 if success else 1)


if __name__ == "__main__":
    main()
