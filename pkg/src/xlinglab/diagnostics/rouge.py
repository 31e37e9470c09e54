"""ROUGE-L: LCS-based F-measure over whitespace tokens, beta = 1."""


def lcs_len(a: list, b: list) -> int:
    """Longest common subsequence length, O(len(a)*len(b)) table."""
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0] * (len(b) + 1)
        for j, y in enumerate(b, start=1):
            cur[j] = prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1])
        prev = cur
    return prev[-1]


def rouge_l(candidate: str, reference: str) -> float:
    """Harmonic mean of LCS precision and recall; 0 when either side is empty."""
    c, r = candidate.split(), reference.split()
    if not c or not r:
        return 0.0
    l = lcs_len(c, r)
    if l == 0:
        return 0.0
    p, q = l / len(c), l / len(r)
    return 2 * p * q / (p + q)
