#!/usr/bin/env python3
"""Solve an LP-format model with HiGHS and write a wg7 solution file.

usage: highs_solve.py MODEL.lp SOLUTION.txt [TIME_LIMIT_SECONDS]

The solution file starts with `status feasible|infeasible|timeout|unknown`,
followed by one `name value` line per variable when feasible.
"""
import sys

try:
    import highspy
except ImportError:
    sys.stderr.write("highspy is not installed\n")
    sys.exit(127)


def main():
    if len(sys.argv) < 3:
        sys.stderr.write(__doc__)
        return 2
    lp, sol = sys.argv[1], sys.argv[2]
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("threads", 1)
    if len(sys.argv) > 3:
        h.setOptionValue("time_limit", float(sys.argv[3]))
    if h.readModel(lp) != highspy.HighsStatus.kOk:
        sys.stderr.write("cannot read %s\n" % lp)
        return 3
    h.run()
    status = h.getModelStatus()
    ms = highspy.HighsModelStatus
    with open(sol, "w") as f:
        if status == ms.kOptimal:
            f.write("status feasible\n")
            values = h.getSolution().col_value
            lp_model = h.getLp()
            for name, v in zip(lp_model.col_names_, values):
                f.write("%s %d\n" % (name, 1 if v > 0.5 else 0))
        elif status in (ms.kInfeasible, ms.kUnboundedOrInfeasible):
            # all columns are binary, so this cannot be unbounded
            f.write("status infeasible\n")
        elif status == ms.kTimeLimit:
            f.write("status timeout\n")
        else:
            f.write("status unknown %s\n" % h.modelStatusToString(status))
    return 0


if __name__ == "__main__":
    sys.exit(main())
