"""Write the reference scenario family to scenarios/ref-{1..5}.scn.

Each scenario is a two-SRF vehicle chain: six gNBs at weight 1 from their
SRF, each SRF at weight 2k from the AMF (k = 1..5), and one vehicle that
attaches once and moves 12 times (9 intra, 3 inter).
"""

from pathlib import Path

CORE_WEIGHTS = (2, 4, 6, 8, 10)

# cells visited after the initial attach at g1
MOVES = ["g2", "g3", "g4", "g5", "g6", "g4", "g1", "g2", "g3", "g4", "g5", "g6"]


def scenario_text(index: int, core_weight: int) -> str:
    lines = [
        f"# ref-{index}: SRF<->core weight {core_weight}, gNB<->SRF weight 1",
        "[nodes]",
        "amf AMF", "seaf SEAF", "ausf AUSF", "udm UDM", "smf SMF", "upf UPF",
        "srf1 SRF", "srf2 SRF",
    ]
    lines += [f"g{i} GNB srf=srf1" for i in (1, 2, 3)]
    lines += [f"g{i} GNB srf=srf2" for i in (4, 5, 6)]
    lines += ["v1 VEH", "[links]",
              "amf seaf 1", "amf ausf 1", "ausf udm 1", "amf smf 1", "smf upf 1",
              f"srf1 amf {core_weight}", f"srf2 amf {core_weight}"]
    lines += [f"g{i} srf1 1" for i in (1, 2, 3)]
    lines += [f"g{i} srf2 1" for i in (4, 5, 6)]
    lines += ["[config]", "edge_terminated=identity,success", "full_auth_every=4",
              "srf_parent=AMF", "[trace]", "0 attach v1 g1"]
    lines += [f"{t} move v1 {cell}" for t, cell in enumerate(MOVES, start=1)]
    return "\n".join(lines) + "\n"


def main() -> None:
    out = Path(__file__).resolve().parent.parent / "scenarios"
    out.mkdir(exist_ok=True)
    for i, w in enumerate(CORE_WEIGHTS, start=1):
        path = out / f"ref-{i}.scn"
        path.write_text(scenario_text(i, w), encoding="utf-8", newline="\n")
        print(path)


if __name__ == "__main__":
    main()
