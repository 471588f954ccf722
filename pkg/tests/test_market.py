import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flexmarket.errors import InsufficientSupply, TooLarge
from flexmarket.market import (
    AnnealConfig,
    HourlyBooks,
    SupplyOffer,
    brute_force_select,
    create_schedule,
    evaluate_selection,
    price_for_demand,
    run_market,
)


def oracle_clearing(demand, offers):
    """Independent merit-order oracle: walk the sorted book and cut at demand."""
    if demand == 0:
        return 0.0, []
    book = sorted(offers, key=lambda o: (o.price, o.producer))
    accepted, covered = [], 0.0
    for o in book:
        if covered >= demand:
            break
        take = min(o.power, demand - covered)
        accepted.append((o.producer, take, o.price))
        covered += take
    if covered < demand:
        raise InsufficientSupply("oracle: short book")
    return accepted[-1][2], accepted


def random_book(rng, n=8):
    return [
        SupplyOffer(f"p{j}", float(rng.uniform(1, 500)), float(rng.uniform(0, 2999)))
        for j in range(n)
    ]


class TestPriceForDemand:
    def test_zero_demand(self):
        price, schedule = price_for_demand(0.0, random_book(np.random.default_rng(0)))
        assert price == 0.0 and schedule == []

    def test_negative_demand_rejected(self):
        with pytest.raises(ValueError):
            price_for_demand(-1.0, random_book(np.random.default_rng(0)))

    def test_marginal_offer_pro_rated(self):
        book = [SupplyOffer("a", 10, 5.0), SupplyOffer("b", 10, 7.0)]
        price, schedule = price_for_demand(13.0, book)
        assert price == 7.0
        assert [i.accepted for i in schedule] == [10.0, 3.0]

    def test_insufficient_supply(self):
        with pytest.raises(InsufficientSupply):
            price_for_demand(100.0, [SupplyOffer("a", 10, 5.0)])

    def test_matches_oracle_on_random_books(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            book = random_book(rng, n=int(rng.integers(1, 12)))
            total = sum(o.power for o in book)
            demand = float(rng.uniform(0, total))
            price, schedule = price_for_demand(demand, book)
            o_price, o_accept = oracle_clearing(demand, book)
            assert price == o_price
            assert [(i.offer.producer, i.accepted) for i in schedule if i.accepted > 0] == [
                (name, take) for name, take, _ in o_accept if take > 0
            ]
            assert sum(i.accepted for i in schedule) == pytest.approx(demand, abs=1e-9)

    def test_price_is_max_accepted_price(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            book = random_book(rng)
            demand = float(rng.uniform(1, sum(o.power for o in book)))
            price, schedule = price_for_demand(demand, book)
            assert price == max(i.offer.price for i in schedule)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.tuples(st.floats(0.1, 100), st.floats(0, 3000)), min_size=1, max_size=10),
           st.floats(0, 1))
    def test_demand_monotonicity(self, raw, frac):
        book = [SupplyOffer(f"p{j}", p, pr) for j, (p, pr) in enumerate(raw)]
        total = sum(o.power for o in book)
        lo, hi = frac * total * 0.5, frac * total
        p_lo, _ = price_for_demand(lo, book)
        p_hi, _ = price_for_demand(hi, book)
        assert p_lo <= p_hi


class TestCreateSchedule:
    def test_flat_demand_identical_books(self):
        book = random_book(np.random.default_rng(2))
        prices, schedule = create_schedule(np.full(24, 100.0), [book] * 24)
        assert len(set(prices.tolist())) == 1
        for items in schedule:
            assert sum(i.accepted for i in items) == pytest.approx(100.0)

    def test_welfare_permutation_invariance(self):
        book = [SupplyOffer("a", 50, 10.0), SupplyOffer("b", 50, 10.0),
                SupplyOffer("c", 50, 20.0)]
        permuted = [book[2], book[0], book[1]]
        demand = np.full(24, 80.0)
        w1 = HourlyBooks([book] * 24).welfare(demand)
        w2 = HourlyBooks([permuted] * 24).welfare(demand)
        assert w1 == pytest.approx(w2, rel=1e-12)


class TestHourlyBooks:
    def test_dispatch_matches_price_for_demand(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            books = [random_book(rng, n=int(rng.integers(1, 10))) for _ in range(24)]
            totals = np.array([sum(o.power for o in b) for b in books])
            demand = rng.uniform(0, totals)
            marginal, cost = HourlyBooks(books).dispatch(demand)
            for h in range(24):
                price, schedule = price_for_demand(float(demand[h]), books[h])
                assert marginal[h] == pytest.approx(price)
                assert cost[h] == pytest.approx(
                    sum(i.accepted * i.offer.price for i in schedule), rel=1e-12, abs=1e-9
                )

    def test_welfare_matches_evaluate_selection(self):
        rng = np.random.default_rng(6)
        books = [random_book(rng) + [SupplyOffer("buf", 10000, 3000.0)] for _ in range(24)]
        profiles = [[rng.uniform(10, 200, 24)], [rng.uniform(10, 200, 24)]]
        direct = evaluate_selection((0, 0), books, profiles)
        fast = HourlyBooks(books).welfare(profiles[0][0] + profiles[1][0])
        assert direct == pytest.approx(fast, rel=1e-9)

    def test_shortage_raises(self):
        books = [[SupplyOffer("a", 10, 5.0)]] * 24
        with pytest.raises(InsufficientSupply):
            HourlyBooks(books).dispatch(np.full(24, 11.0))


def _instance(rng, n_groups, n_profiles):
    books = [
        [SupplyOffer(f"p{j}", float(rng.uniform(100, 800)), float(rng.uniform(1, 200)))
         for j in range(5)] + [SupplyOffer("buf", 10000.0, 3000.0)]
        for _ in range(24)
    ]
    bids = [
        [list(rng.uniform(20, 300, 24)) for _ in range(n_profiles)]
        for _ in range(n_groups)
    ]
    return books, bids


class TestRunMarket:
    def test_single_profile_groups_skip_annealing(self):
        rng = np.random.default_rng(8)
        books, bids = _instance(rng, 3, 1)
        result = run_market(books, bids, AnnealConfig(), np.random.default_rng(0))
        assert result.selection == (0, 0, 0)
        best_value, best_sel = brute_force_select(books, bids)
        assert result.welfare == pytest.approx(best_value)

    def test_prices_match_chosen_demand(self):
        rng = np.random.default_rng(9)
        books, bids = _instance(rng, 2, 3)
        result = run_market(books, bids, AnnealConfig(), np.random.default_rng(1))
        demand = sum(np.asarray(bids[g][i]) for g, i in enumerate(result.selection))
        prices, _ = create_schedule(demand, books)
        np.testing.assert_allclose(result.prices, prices)
        for h in range(24):
            assert sum(i.accepted for i in result.schedule[h]) == pytest.approx(demand[h])

    def test_deterministic_for_fixed_rng(self):
        rng = np.random.default_rng(10)
        books, bids = _instance(rng, 3, 4)
        a = run_market(books, bids, AnnealConfig(), np.random.default_rng(5))
        b = run_market(books, bids, AnnealConfig(), np.random.default_rng(5))
        assert a.selection == b.selection and a.welfare == b.welfare

    def test_finds_brute_force_optimum(self):
        rng = np.random.default_rng(12)
        for _ in range(5):
            books, bids = _instance(rng, 3, 3)
            best_value, best_sel = brute_force_select(books, bids)
            result = run_market(books, bids, AnnealConfig(), np.random.default_rng(2))
            assert result.welfare == pytest.approx(best_value, rel=1e-12)

    def test_anneal_config_validation(self):
        with pytest.raises(ValueError):
            AnnealConfig(initial_temp=0.0)
        with pytest.raises(ValueError):
            AnnealConfig(iterations=0)


class TestBruteForceSelect:
    def test_single_selection_space(self):
        rng = np.random.default_rng(13)
        books, bids = _instance(rng, 2, 1)
        value, selection = brute_force_select(books, bids)
        assert selection == (0, 0)

    def test_too_large(self):
        rng = np.random.default_rng(14)
        books, bids = _instance(rng, 3, 4)
        with pytest.raises(TooLarge):
            brute_force_select(books, bids, cap=10)

    def test_tie_breaks_lexicographically(self):
        books = [[SupplyOffer("a", 1000, 10.0)]] * 24
        bids = [[[50.0] * 24, [50.0] * 24]]  # identical profiles tie exactly
        _, selection = brute_force_select(books, bids)
        assert selection == (0,)


class TestSupplyOfferValidation:
    def test_power_positive(self):
        with pytest.raises(ValueError):
            SupplyOffer("a", 0.0, 10.0)

    def test_price_within_cap(self):
        with pytest.raises(ValueError):
            SupplyOffer("a", 10.0, 3000.1)
