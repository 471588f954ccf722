"""Monetary settlement: spot energy, balancing activations, two-price
producer imbalance, one-price consumer imbalance, and equal socialization of
each utility's balancing cost across its users.

Every transaction is double-entry, so the daily ledger sums to zero; a
failed zero-sum check signals an accounting bug, not a market outcome.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGroup, LedgerImbalance

SYSTEM_OPERATOR = "system_operator"

CATEGORIES = (
    "spot_energy",
    "balancing_activation",
    "imbalance_charge",
    "socialized_balancing",
    "user_tariff",
)


@dataclass(frozen=True)
class LedgerEntry:
    party: str
    category: str
    amount: float  # EUR, positive = credit to the party


@dataclass
class SettlementLedger:
    entries: list = field(default_factory=list)

    def post(self, debtor, creditor, category, amount):
        """Move ``amount`` EUR from debtor to creditor; negative flips direction."""
        if amount == 0.0:
            return
        self.entries.append(LedgerEntry(debtor, category, -amount))
        self.entries.append(LedgerEntry(creditor, category, amount))

    def total(self):
        return sum(e.amount for e in self.entries)

    def gross(self):
        return sum(abs(e.amount) for e in self.entries)

    def party_net(self, party):
        return sum(e.amount for e in self.entries if e.party == party)

    def check_zero_sum(self, rel_tol=1e-9):
        total = self.total()
        scale = max(self.gross(), 1.0)
        if abs(total) > rel_tol * scale:
            raise LedgerImbalance(f"ledger off by {total} EUR against gross {scale}")


@dataclass(frozen=True)
class UserBill:
    user: str
    usage_cost: float             # spot price x hourly consumption, EUR
    shared_balancing_cost: float  # equal share of the utility's balancing cost
    group: str                    # "flexible" | "normal"
    energy: float                 # MWh consumed


def _hour_direction(diff60_h, limit):
    if diff60_h > limit:
        return 1
    if diff60_h < -limit:
        return -1
    return 0


def settle_day(market_result, activations, imbalance_prices, utility_scheduled,
               utility_realized, producer_deviations, diff60, limit):
    """Build the day's zero-sum ledger.

    utility_scheduled / utility_realized: name -> 24 hourly MWh.
    producer_deviations: name -> 24 hourly MWh (realized - scheduled), for
    producers that physically deviate from schedule (e.g. the renewable).
    Activation payments and imbalance charges run against the system
    operator account, which keeps any residual explicit.
    """
    spot = np.asarray(market_result.prices, dtype=float)
    imb = np.asarray(imbalance_prices, dtype=float)
    ledger = SettlementLedger()

    # spot energy: producers paid for accepted volumes, utilities pay for bids
    producer_revenue = {}
    for h in range(24):
        for item in market_result.schedule[h]:
            producer_revenue[item.offer.producer] = (
                producer_revenue.get(item.offer.producer, 0.0) + item.accepted * spot[h]
            )
    for name, revenue in sorted(producer_revenue.items()):
        ledger.post(SYSTEM_OPERATOR, name, "spot_energy", revenue)
    for name in sorted(utility_scheduled):
        cost = float(utility_scheduled[name] @ spot)
        ledger.post(name, SYSTEM_OPERATOR, "spot_energy", cost)

    # balancing activations: up paid by the system, down repaid to it
    for act in activations:
        amount = act.energy * act.price
        if act.direction == "up":
            ledger.post(SYSTEM_OPERATOR, act.producer, "balancing_activation", amount)
        else:
            ledger.post(act.producer, SYSTEM_OPERATOR, "balancing_activation", amount)

    # two-price producer imbalance: aggravating deviations at the balancing
    # price, opposing deviations at spot
    direction = np.array([_hour_direction(diff60[h], limit) for h in range(24)])
    for name in sorted(producer_deviations):
        dev = np.asarray(producer_deviations[name], dtype=float)
        for h in range(24):
            d = dev[h]
            if d == 0.0:
                continue
            aggravating = (direction[h] > 0 and d < 0) or (direction[h] < 0 and d > 0)
            price = imb[h] if aggravating else spot[h]
            # d > 0: producer sells its surplus; d < 0: producer buys back
            ledger.post(SYSTEM_OPERATOR, name, "imbalance_charge", d * price)

    # one-price consumer imbalance on the utilities' consumption deviation
    for name in sorted(utility_scheduled):
        dev = np.asarray(utility_realized[name], dtype=float) - np.asarray(
            utility_scheduled[name], dtype=float
        )
        ledger.post(name, SYSTEM_OPERATOR, "imbalance_charge", float(dev @ imb))

    # pass-through to users: tariff on realized consumption plus the
    # socialized balancing cost, leaving every utility net zero
    for name in sorted(utility_scheduled):
        tariff = float(np.asarray(utility_realized[name], dtype=float) @ spot)
        ledger.post(f"users:{name}", name, "user_tariff", tariff)
        balancing_cost = utility_balancing_cost(
            spot, imb, utility_scheduled[name], utility_realized[name]
        )
        ledger.post(f"users:{name}", name, "socialized_balancing", balancing_cost)

    ledger.check_zero_sum()
    return ledger


def utility_balancing_cost(spot_prices, imbalance_prices, scheduled_24, realized_24):
    """What imbalance cost a utility on top of spot-priced realized energy."""
    spot = np.asarray(spot_prices, dtype=float)
    imb = np.asarray(imbalance_prices, dtype=float)
    dev = np.asarray(realized_24, dtype=float) - np.asarray(scheduled_24, dtype=float)
    return float(dev @ (imb - spot))


def bill_users(user_ids, groups, spot_prices, realized_user_consumption,
               utility_balancing_cost_eur):
    """Per-user bills for one utility and one day.

    ``realized_user_consumption`` is an (n_users, 24) MWh matrix.  The
    balancing cost is split equally: every user of the utility pays the same
    share regardless of group.
    """
    spot = np.asarray(spot_prices, dtype=float)
    consumption = np.asarray(realized_user_consumption, dtype=float)
    n = consumption.shape[0]
    if n == 0:
        return []
    share = utility_balancing_cost_eur / n
    usage = consumption @ spot
    energy = consumption.sum(axis=1)
    return [
        UserBill(user_ids[i], float(usage[i]), share, groups[i], float(energy[i]))
        for i in range(n)
    ]


def cost_metrics(bills, total_energy):
    """Per-MWh cost split of a set of bills; combined = usage + balancing."""
    usage = sum(b.usage_cost for b in bills)
    shared = sum(b.shared_balancing_cost for b in bills)
    usage_per_mwh = usage / total_energy
    balancing_per_mwh = shared / total_energy
    return {
        "combined_eur_per_mwh": usage_per_mwh + balancing_per_mwh,
        "usage_eur_per_mwh": usage_per_mwh,
        "balancing_eur_per_mwh": balancing_per_mwh,
    }


def group_advantage(bills):
    """Relative per-MWh cost advantage of flexible over normal users."""
    flex = [b for b in bills if b.group == "flexible"]
    normal = [b for b in bills if b.group == "normal"]
    if not flex or not normal:
        raise DegenerateGroup("both user groups must be non-empty")

    def per_mwh(group):
        cost = sum(b.usage_cost + b.shared_balancing_cost for b in group)
        energy = sum(b.energy for b in group)
        return cost / energy

    normal_cost = per_mwh(normal)
    return (normal_cost - per_mwh(flex)) / normal_cost
