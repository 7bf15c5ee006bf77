"""One PASS/FAIL line per acceptance criterion, echoed in the pytest summary."""
LINES = []


def report(number, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    LINES.append(line)
    print(line)
    return ok
