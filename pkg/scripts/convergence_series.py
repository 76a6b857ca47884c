"""Running-average Nash product over repeated noisy contacts.

Replays one scenario many times with fresh duration-estimation error per
contact and emits the running average next to the no-randomness ideal as
CSV, ready for plotting the convergence curve.
"""

import argparse
from dataclasses import replace

from airfair.scenario_io import preset_scenario
from airfair.simulate import PcdErrorModel, repeated_contacts, scale_contact_durations


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--preset", default="table1")
    ap.add_argument("--contacts", type=int, default=200)
    ap.add_argument("--duration", type=float, default=20.0, help="contact duration in seconds")
    ap.add_argument("--stddev", type=float, default=1.0, help="estimation error stddev")
    ap.add_argument("--seed", type=int, default=None)
    args = ap.parse_args(argv)

    scenario = scale_contact_durations(preset_scenario(args.preset), args.duration)
    scenario = replace(scenario, pcd_error=PcdErrorModel(stddev=args.stddev))
    running, ideal = repeated_contacts(scenario, args.contacts, seed=args.seed)

    print("contact,running_avg_nash,ideal_nash")
    for k, value in enumerate(running, start=1):
        print(f"{k},{value:.6f},{ideal:.6f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
