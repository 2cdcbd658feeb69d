"""Independent brute-force oracles used to cross-check the real
implementations. Kept free of any shared code paths on purpose."""


def alpha_direct(pairs):
    """Krippendorff's alpha for two coders straight from the definition.

    ``pairs``: list of (value_a, value_b), one per item. Observed
    disagreement averages the within-item pair disagreements; expected
    disagreement enumerates every ordered pair of pooled values.
    """
    m = len(pairs)
    n = 2 * m
    values = []
    for a, b in pairs:
        values.extend([a, b])

    # Within each item the two coders form 2 ordered pairs; both disagree or
    # neither does.
    d_o = sum(1 for a, b in pairs if a != b) / m

    total = 0
    disagree = 0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            total += 1
            if values[i] != values[j]:
                disagree += 1
    d_e = disagree / total
    if d_e == 0:
        return 1.0
    return 1.0 - d_o / d_e
