"""CSV and Markdown emission for sources-by-targets metric tables."""


def _cell(value) -> str:
    return f"{100 * value:.2f}" if isinstance(value, float) else str(value)


def metric_table_csv(rows: dict[str, dict[str, float]], targets: list[str],
                     row_label: str = "source") -> str:
    lines = [",".join([row_label] + targets)]
    for name in rows:
        lines.append(",".join([name] + [_cell(rows[name].get(t, "")) for t in targets]))
    return "\n".join(lines) + "\n"


def metric_table_markdown(rows: dict[str, dict[str, float]], targets: list[str],
                          row_label: str = "source") -> str:
    head = "| " + " | ".join([row_label] + targets) + " |"
    rule = "|" + "---|" * (len(targets) + 1)
    body = ["| " + " | ".join([name] + [_cell(rows[name].get(t, "")) for t in targets]) + " |"
            for name in rows]
    return "\n".join([head, rule] + body) + "\n"
