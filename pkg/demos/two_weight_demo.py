"""The two-weight pair with a point mass at 0 and mass on I_j = [4^-j - 4^-j/√j, 4^-j).

Prints the A2 ratios and the first- and second-order energy terms; the
first-order partial sums grow like the harmonic series while the
second-order ones level off.
"""

from math import log

from alpert.twoweight import example_energy_table

rows = example_energy_table(eps=0.1, j_max=40, k=2)
print(f"{'j':>3} {'A2 ratio':>10} {'j·term1':>10} {'S1':>8} {'S2':>10} {'S1/(H_j-1)':>11}")
H = 1.0
for r in rows:
    j = r["j"]
    H += 1 / j
    if j in (2, 3, 5, 10, 20, 30, 40):
        print(f"{j:>3} {r['a2_ratio']:10.6f} {j * r['term1']:10.4f} {r['partial1']:8.4f} "
              f"{r['partialk']:10.3e} {r['partial1'] / (H - 1):11.4f}")
print(f"S1(40)/S1(20) = {rows[-1]['partial1'] / rows[18]['partial1']:.4f}  "
      f"(log 40/log 20 = {log(40) / log(20):.4f})")
