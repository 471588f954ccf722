import numpy as np
import pytest

from flexmarket.balancing import BalancingActivation
from flexmarket.errors import DegenerateGroup, LedgerImbalance
from flexmarket.market import MarketResult, ScheduleItem, SupplyOffer
from flexmarket.settlement import (
    SYSTEM_OPERATOR,
    LedgerEntry,
    SettlementLedger,
    UserBill,
    bill_users,
    cost_metrics,
    group_advantage,
    settle_day,
    utility_balancing_cost,
)


class TestLedger:
    def test_post_is_double_entry(self):
        ledger = SettlementLedger()
        ledger.post("a", "b", "spot_energy", 100.0)
        assert ledger.total() == 0.0
        assert ledger.party_net("a") == -100.0
        assert ledger.party_net("b") == 100.0

    def test_zero_amount_skipped(self):
        ledger = SettlementLedger()
        ledger.post("a", "b", "spot_energy", 0.0)
        assert ledger.entries == []

    def test_zero_sum_check_raises_on_one_sided_entry(self):
        ledger = SettlementLedger()
        ledger.entries.append(LedgerEntry("a", "spot_energy", 5.0))
        with pytest.raises(LedgerImbalance):
            ledger.check_zero_sum()


def _market(spot_price, producer, utility_mwh):
    offer = SupplyOffer(producer, utility_mwh.max() + 1.0, spot_price)
    schedule = tuple(
        (ScheduleItem(offer, float(utility_mwh[h])),) for h in range(24)
    )
    return MarketResult(np.full(24, spot_price), schedule, (), 0.0)


class TestSettleDay:
    def test_zero_deviation_day(self):
        sched = np.full(24, 100.0)
        market = _market(40.0, "plant", sched)
        ledger = settle_day(
            market, [], np.full(24, 40.0), {"util": sched}, {"util": sched},
            {}, np.zeros(24), 10.0,
        )
        assert ledger.party_net("plant") == pytest.approx(24 * 100.0 * 40.0)
        assert ledger.party_net("util") == pytest.approx(0.0)
        assert ledger.party_net("users:util") == pytest.approx(-24 * 100.0 * 40.0)
        assert ledger.total() == pytest.approx(0.0, abs=1e-9)

    def test_utility_nets_zero_with_deviation(self):
        sched = np.full(24, 100.0)
        real = sched.copy()
        real[8] = 130.0
        imb = np.full(24, 40.0)
        imb[8] = 200.0
        market = _market(40.0, "plant", sched)
        acts = [BalancingActivation(34, "plant", "up", 30.0, 200.0)]
        ledger = settle_day(
            market, acts, imb, {"util": sched}, {"util": real},
            {}, real - sched, 10.0,
        )
        assert ledger.party_net("util") == pytest.approx(0.0, abs=1e-9)
        # users pay spot on realized energy plus the imbalance premium
        expected = -(real @ np.full(24, 40.0) + 30.0 * (200.0 - 40.0))
        assert ledger.party_net("users:util") == pytest.approx(expected)
        ledger.check_zero_sum()

    def test_aggravating_producer_deviation_at_imbalance_price(self):
        sched = np.full(24, 100.0)
        imb = np.full(24, 40.0)
        imb[3] = 300.0
        market = _market(40.0, "plant", sched)
        dev = np.zeros(24)
        dev[3] = -20.0  # short while the system is short: aggravating
        diff60 = np.zeros(24)
        diff60[3] = 20.0
        ledger = settle_day(
            market, [], imb, {"util": sched}, {"util": sched},
            {"wind": dev}, diff60, 10.0,
        )
        spot_revenue = 24 * 100.0 * 40.0
        assert ledger.party_net("plant") == pytest.approx(spot_revenue)
        assert ledger.party_net("wind") == pytest.approx(-20.0 * 300.0)

    def test_opposing_producer_deviation_at_spot(self):
        sched = np.full(24, 100.0)
        imb = np.full(24, 40.0)
        imb[3] = 300.0
        market = _market(40.0, "plant", sched)
        dev = np.zeros(24)
        dev[3] = 20.0  # long while the system is short: opposing, spot-priced
        diff60 = np.zeros(24)
        diff60[3] = 20.0
        ledger = settle_day(
            market, [], imb, {"util": sched}, {"util": sched},
            {"wind": dev}, diff60, 10.0,
        )
        assert ledger.party_net("wind") == pytest.approx(20.0 * 40.0)


class TestUtilityBalancingCost:
    def test_zero_when_imbalance_price_equals_spot(self):
        spot = np.full(24, 50.0)
        assert utility_balancing_cost(spot, spot, np.full(24, 10.0),
                                      np.full(24, 14.0)) == 0.0

    def test_premium_on_deviation(self):
        spot = np.full(24, 50.0)
        imb = np.full(24, 50.0)
        imb[0] = 250.0
        sched = np.full(24, 10.0)
        real = sched.copy()
        real[0] = 13.0
        assert utility_balancing_cost(spot, imb, sched, real) == pytest.approx(3.0 * 200.0)


class TestBillUsers:
    def test_equal_share_regardless_of_group(self):
        consumption = np.ones((4, 24))
        bills = bill_users(["a", "b", "c", "d"],
                           ["normal", "normal", "flexible", "flexible"],
                           np.full(24, 50.0), consumption, 100.0)
        assert all(b.shared_balancing_cost == 25.0 for b in bills)
        assert all(b.usage_cost == pytest.approx(24 * 50.0) for b in bills)

    def test_empty_utility(self):
        assert bill_users([], [], np.full(24, 50.0), np.zeros((0, 24)), 0.0) == []


class TestCostMetrics:
    def test_combined_is_exact_sum(self):
        bills = [UserBill("a", 120.0, 30.0, "normal", 2.0),
                 UserBill("b", 60.0, 30.0, "flexible", 1.0)]
        m = cost_metrics(bills, 3.0)
        assert m["usage_eur_per_mwh"] == pytest.approx(60.0)
        assert m["balancing_eur_per_mwh"] == pytest.approx(20.0)
        assert m["combined_eur_per_mwh"] == pytest.approx(
            m["usage_eur_per_mwh"] + m["balancing_eur_per_mwh"]
        )


class TestGroupAdvantage:
    def test_identical_costs_zero(self):
        bills = [UserBill("a", 100.0, 10.0, "normal", 2.0),
                 UserBill("b", 100.0, 10.0, "flexible", 2.0)]
        assert group_advantage(bills) == pytest.approx(0.0)

    def test_cheaper_flexible_positive(self):
        bills = [UserBill("a", 100.0, 10.0, "normal", 2.0),
                 UserBill("b", 80.0, 10.0, "flexible", 2.0)]
        assert group_advantage(bills) > 0.0

    def test_degenerate_group(self):
        with pytest.raises(DegenerateGroup):
            group_advantage([UserBill("a", 1.0, 0.0, "normal", 1.0)])
