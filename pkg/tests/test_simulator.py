import random

import pytest
from hypothesis import given, settings, strategies as st

from srfsim.errors import NotStatic, OutOfOrderEvent, ResyncLoop, TopologyMismatch
from srfsim.keychain import KeyLabel, kdf
from srfsim.netmodel import Action, SimEvent, parse_scenario
from srfsim.simulator import initial_state, run, step

from conftest import REFERENCE, scenario
from oracles import random_scenario


def lengths(scn, mode, seed=0):
    _, _, trs = run(scn.topology, scn.trace, mode, seed, scn.config)
    return [len(t) for t in trs]


def test_single_attach():
    scn = scenario(["0 attach v1 g1"])
    assert lengths(scn, "srf") == [9]
    assert lengths(scn, "baseline") == [9]


def test_attach_then_intra_move():
    scn = scenario(["0 attach v1 g1", "1 move v1 g2"])
    assert lengths(scn, "srf") == [9, 4]
    assert lengths(scn, "baseline") == [9, 9]


def test_desync_before_attach():
    scn = scenario(["0 inject desync v1", "1 attach v1 g1", "2 move v1 g2"])
    assert lengths(scn, "srf")[0] == 11
    assert lengths(scn, "baseline") == [11, 9]


def test_two_desyncs_loop():
    scn = scenario(["0 inject desync v1", "0 inject desync v1", "1 attach v1 g1"])
    with pytest.raises(ResyncLoop) as err:
        run(scn.topology, scn.trace, "srf", 0, scn.config)
    assert err.value.event_time == 1


def test_inter_handover_cadence():
    moves = ["0 attach v1 g1"] + [f"{i} move v1 {'g3' if i % 2 else 'g1'}" for i in range(1, 9)]
    scn = scenario(moves)
    assert lengths(scn, "srf") == [9, 6, 6, 6, 9, 6, 6, 6, 9]
    scn = scenario(moves, ["full_auth_every=2"])
    assert lengths(scn, "srf") == [9, 6, 9, 6, 9, 6, 9, 6, 9]


def test_faults_wait_for_next_full_auth():
    scn = scenario(["0 attach v1 g1", "1 inject desync v1", "2 move v1 g2", "3 move v1 g3",
                    "4 move v1 g1"], ["full_auth_every=1"])
    assert lengths(scn, "srf") == [9, 4, 11, 9]


def test_replay_end_to_end():
    scn = scenario(["0 attach v1 g1", "1 inject replay v1", "2 move v1 g2", "3 move v1 g1"])
    _, state, trs = run(scn.topology, scn.trace, "baseline", 0, scn.config)
    assert [str(t.outcome) for t in trs] == ["Success", "Failure(replay)", "Success"]
    assert state.subscribers["v1"].accepted == [1, 2]
    # srf mode: replay fires at the next full auth; the failed vehicle then re-auths in full
    scn = scenario(["0 attach v1 g1", "1 inject replay v1", "2 move v1 g3", "3 move v1 g2"],
                   ["full_auth_every=1"])
    _, state, trs = run(scn.topology, scn.trace, "srf", 0, scn.config)
    assert [str(t.outcome) for t in trs] == ["Success", "Failure(replay)", "Success"]
    assert [len(t) for t in trs] == [9, 7, 9]


def test_step_fold_law():
    scn = scenario(["0 attach v1 g1", "3 move v1 g2"])
    ledger, _, _ = run(scn.topology, scn.trace, "srf", 7)
    state = initial_state(scn.topology, "srf", 7)
    for ev in scn.trace:
        state = step(state, ev)
    assert state.ledger == ledger


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["baseline", "srf"]))
def test_fold_law_random(seed, mode):
    scn = parse_scenario(random_scenario(random.Random(seed)))
    ledger, final, _ = run(scn.topology, scn.trace, mode, seed, scn.config)
    state = initial_state(scn.topology, mode, seed, scn.config)
    for ev in scn.trace:
        step(state, ev)
    assert state.ledger == ledger
    assert ([k.material for k in state.keys.keys.values()]
            == [k.material for k in final.keys.keys.values()])


def test_step_out_of_order():
    scn = scenario(["5 attach v1 g1"])
    state = step(initial_state(scn.topology, "srf"), scn.trace.events[0])
    with pytest.raises(OutOfOrderEvent):
        step(state, SimEvent(4, Action.MOVE, "v1", "g2"))


def test_park_promote_serves_as_gnb():
    scn = scenario(["0 attach v1 g3", "1 park sv1", "2 promote sv1", "3 move v1 sv1"])
    ledger, state, trs = run(scn.topology, scn.trace, "srf", 0, scn.config)
    assert [len(t) for t in trs] == [9, 4]
    assert trs[1].endpoints()[0] == ("v1", "sv1")
    assert state.keys.get(KeyLabel.K_SRF_SW_SV, "sv1") is not None
    kv = state.keys.get(KeyLabel.K_V, "v1")
    assert state.keys.parent(kv).label is KeyLabel.K_SRF_SW
    state.keys.verify()


def test_promote_moving_vehicle():
    scn = scenario(["0 attach v1 g1", "1 park v1", "2 promote v1"])
    with pytest.raises(NotStatic):
        run(scn.topology, scn.trace, "srf", 0, scn.config)


def test_sv_without_srf_in_srf_mode():
    base = "[nodes]\namf AMF\nsrf1 SRF\ng1 GNB srf=srf1\nsv1 SV\nv1 VEH\n" \
           "[links]\namf srf1 2\ng1 srf1 1\nsv1 g1 1\n[trace]\n"
    scn = scenario(["0 park sv1", "1 promote sv1"], base=base)
    run(scn.topology, scn.trace, "baseline", 0, scn.config)
    with pytest.raises(TopologyMismatch):
        run(scn.topology, scn.trace, "srf", 0, scn.config)


def test_installed_keys_recompute_from_branch():
    scn = scenario(["0 attach v1 g1", "1 move v1 g2", "2 move v1 g3", "3 move v1 g1"])
    for mode in ("baseline", "srf"):
        _, state, trs = run(scn.topology, scn.trace, mode, 0, scn.config)
        h = state.keys
        h.verify()
        kv = h.get(KeyLabel.K_V, "v1")
        parent = h.parent(kv)
        assert kdf(parent.material, kv.context) == kv.material
        expected = {KeyLabel.K_AMF} if mode == "baseline" else {KeyLabel.K_SRF_SW,
                                                                KeyLabel.K_SRF_SW_P}
        assert parent.label in expected
        assert len(h.history["v1"]) == sum(t.outcome.success for t in trs)


def test_serving_state_invariant():
    scn = scenario(["0 attach v1 g1", "1 move v1 g3", "2 move v1 g2"])
    _, state, _ = run(scn.topology, scn.trace, "srf", 0, scn.config)
    assert state.serving_gnb == {"v1": "g2"}
    assert state.serving_srf == {"v1": "srf1"}


def test_determinism():
    scn = parse_scenario(REFERENCE[2].read_bytes())
    a = run(scn.topology, scn.trace, "srf", 11, scn.config)
    b = run(scn.topology, scn.trace, "srf", 11, scn.config)
    assert a[0] == b[0]
    assert [t.messages for t in a[2]] == [t.messages for t in b[2]]
    assert ([k.material for k in a[1].keys.keys.values()]
            == [k.material for k in b[1].keys.keys.values()])
    c = run(scn.topology, scn.trace, "srf", 12, scn.config)
    assert c[0] == a[0]  # seed only feeds nonces and key material
    assert a[1].keys.root.material != c[1].keys.root.material
