"""Closed-form time-integrability predicates against numerical quadrature.

    python scripts/predicate_grid.py
"""

from kraichnan.selfsimilar import integrability_predicates, quadrature_confirmation


def main():
    agree = total = 0
    for alpha in (0.4, 0.8, 1.0, 1.4, 1.8):
        for f in (0.1, 0.3, 0.5, 0.7, 0.9):
            for p in (1, 2, 4):
                beta = f * alpha
                pred = integrability_predicates(alpha, beta, p)
                rep = quadrature_confirmation(alpha, beta, p)
                q = rep.predicates()
                ok = q == {k: getattr(pred, k) for k in q}
                agree += ok
                total += 1
                flags = "".join("1" if v else "0" for v in q.values())
                print(f"alpha={alpha:.1f} beta={beta:.2f} p={p}  quadrature={flags}  full={pred.full}  "
                      f"{'agree' if ok else 'DISAGREE'}")
    print(f"{agree}/{total} agree")


if __name__ == "__main__":
    main()
