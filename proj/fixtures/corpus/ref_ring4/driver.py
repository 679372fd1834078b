from lib.topogen import Topogen

def test_bgp_sessions_up(tgen):
    for name in ['r1', 'r2', 'r3', 'r4']:
        tgen.gears[name].wait_bgp_established()
