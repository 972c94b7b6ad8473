#!/usr/bin/env python3
"""Run the reference scenario in both tunnel modes and print a comparison.

Usage: python3 scripts/run_reference.py [--seed N]
"""
import argparse

from iabsim import PathMode, Simulator, load_scenario, measure_throughput


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--scenario", default="paper-reference")
    args = ap.parse_args()

    rows = []
    for mode in (PathMode.UPF_REROUTE, PathMode.BAP_BYPASS):
        scn = load_scenario(args.scenario)
        trace = Simulator(scn, mode=mode, seed=args.seed).run()
        steady = measure_throughput(trace, "dl-ue2", (4.0, 6.5))
        f = trace.summary["flows"]["dl-ue2"]
        rows.append((mode.value, steady, f["mean_latency_s"],
                     f["mean_hop_count"], f["overhead_bytes"],
                     trace.summary["totals"]["header_bytes"]))
        ctl = [c for c in trace.control_deliveries
               if c.association == "uav1-du"]
        print(f"{mode.value}: example F1 uplink path "
              f"{' -> '.join(ctl[0].hop_log)}")
        ue2 = [d for d in trace.deliveries if d.flow_id == "dl-ue2"]
        print(f"{mode.value}: UE2 downlink path "
              f"{' -> '.join(ue2[-1].hop_log)}")

    print(f"\n{'mode':<12} {'steady Mbit/s':>14} {'latency ms':>11} "
          f"{'hops':>6} {'flow ovh B':>11} {'total hdr B':>12}")
    for mode, steady, lat, hops, ovh, hdr in rows:
        print(f"{mode:<12} {steady / 1e6:>14.3f} {lat * 1e3:>11.3f} "
              f"{hops:>6.2f} {ovh:>11d} {hdr:>12d}")


if __name__ == "__main__":
    main()
