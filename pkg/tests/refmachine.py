"""Brute-force reference state machine for step reporting.

Deliberately dumb and independent of the engine: plain dicts and strings,
recomputing everything per call. Used to cross-check the workflow engine and
the ledger-side conformance verdict on randomized report sequences.
"""


def simulate(n_steps, mode, reports):
    """Run a report sequence.

    reports: list of {"step": int, "tools_ok": bool, "parts_ok": bool, "acc_ok": bool}
    Returns a dict with per-call outcomes, final statuses, final state and the
    conformance verdict ("Conformant"/"NonConformant").
    """
    statuses = {i: "Pending" for i in range(1, n_steps + 1)}
    cursor = 1
    state = "Active"
    outcomes = []
    any_deviation = False
    in_order = 0

    for r in reports:
        if state != "Active":
            outcomes.append({"error": "closed"})
            continue
        step = r["step"]
        if step < 1 or step > n_steps:
            outcomes.append({"error": "unknown-step"})
            continue

        devs = []
        if step != cursor:
            devs.append("OutOfOrder")
        if statuses[step] != "Pending":
            devs.append("AlreadyDone")
        if not r.get("tools_ok", True):
            devs.append("MissingTool")
        if not r.get("parts_ok", True):
            devs.append("MissingPart")
        if not r.get("acc_ok", True):
            devs.append("InsufficientAccreditation")

        if not devs:
            statuses[step] = "Done"
            if step == in_order + 1:
                in_order += 1
            accepted = True
            status = "Done"
        else:
            any_deviation = True
            if mode == "Strict":
                accepted = False
                status = statuses[step]
            else:
                accepted = True
                if statuses[step] == "Pending":
                    status = "Done" if step == cursor else "DoneOutOfOrder"
                    statuses[step] = status
                    if status == "Done" and step == in_order + 1:
                        in_order += 1
                else:
                    status = statuses[step]

        if accepted or mode == "Advisory":
            pending = [i for i, s in statuses.items() if s == "Pending"]
            cursor = min(pending) if pending else n_steps + 1
            if not pending:
                state = "Completed"

        outcomes.append({"accepted": accepted, "deviations": devs, "status": status})

    verdict = ("Conformant"
               if state == "Completed" and not any_deviation and in_order == n_steps
               else "NonConformant")
    return {"outcomes": outcomes, "statuses": statuses, "state": state,
            "cursor": cursor, "in_order": in_order, "verdict": verdict}
