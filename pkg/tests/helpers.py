"""Shared builders for in-memory traces, markets, and analytics."""

from spotsim import Market, MarketAnalytics, PricePoint, PriceTrace
from spotsim.trace import HOUR_S


def make_hourly_trace(market_id, prices, window_start=0):
    """One point per hour; the window covers exactly len(prices) hours."""
    points = tuple(
        PricePoint(window_start + h * HOUR_S, p) for h, p in enumerate(prices)
    )
    return PriceTrace(
        market_id=market_id,
        points=points,
        window_start=window_start,
        window_end=window_start + len(prices) * HOUR_S,
    )


def make_market(market_id, prices, on_demand_price=1.0, memory_gb=64.0, vcpus=8):
    return Market(
        market_id=market_id,
        on_demand_price=on_demand_price,
        memory_gb=memory_gb,
        vcpus=vcpus,
        trace=make_hourly_trace(market_id, prices),
    )


def make_analytics(price_rows, on_demand_price=1.0, memory_gb=64.0):
    """Build analytics from {market_id: hourly prices}; all rows share a window."""
    markets = [
        make_market(mid, prices, on_demand_price=on_demand_price, memory_gb=memory_gb)
        for mid, prices in price_rows.items()
    ]
    return MarketAnalytics.build(markets)
