"""Collects one PASS/FAIL line per acceptance criterion."""

LINES = {}


def record(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    LINES[number] = line
    print(line)
    return ok
