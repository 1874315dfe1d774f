"""Builtin step domains.

A step domain maps machine-readable action names to the natural-language
descriptions used in model inputs and targets. The customer-service table
keeps its source spelling as-is (including "costumer") because matching is
done against those exact strings. The travel-booking table ships in two
variants: the original long-form descriptions and a modified set with the
shared lead-in wording trimmed.
"""

from __future__ import annotations

from wdkit.corpus import StepDomain
from wdkit.errors import UnknownDomainTag

_ABCD_STEPS = [
    ("pull-up-account", "pull up the costumer account"),
    ("enter-details", "enter the details"),
    ("verify-identity", "verify costumer identity"),
    ("make-password", "create a new password"),
    ("search-timing", "get arrival date"),
    ("search-policy", "check policy"),
    ("validate-purchase", "validate the purchase"),
    ("search-faq", "search the faq"),
    ("membership", "check membership level"),
    ("search-boots", "search for boots"),
    ("try-again", "ask the costumer to try again"),
    ("ask-the-oracle", "ask the oracle"),
    ("update-order", "update order information"),
    ("promo-code", "offer a promo code"),
    ("update-account", "update costumer account"),
    ("search-membership", "get information about memberships"),
    ("make-purchase", "make a purchase"),
    ("offer-refund", "offer a refund"),
    ("notify-team", "notify team"),
    ("record-reason", "record reason"),
    ("search-jeans", "search for jeans"),
    ("shipping-status", "get the shipping status"),
    ("search-shirt", "search for a shirt"),
    ("instructions", "check the instructions"),
    ("search-jacket", "search for a jacket"),
    ("log-out-in", "ask the costumer to log out then log in"),
    ("select-faq", "select topic in faq"),
    ("subscription-status", "get subscription status"),
    ("send-link", "send a link to the costumer"),
    ("search-pricing", "check pricing"),
]

_MULTIWOZ_ORIGINAL_STEPS = [
    ("find_hotel", "search for a hotel to stay in"),
    ("book_hotel", "book a hotel to stay in"),
    ("find_train", "search for trains that take you places"),
    ("book_train", "book train tickets"),
    ("find_attraction", "search for places to see for leisure"),
    ("find_restaurant", "search for places to wine and dine"),
    ("book_restaurant", "book a table at a restaurant"),
    ("find_hospital", "search for a medical facility or a doctor"),
    ("book_taxi", "book taxis to travel between places"),
    ("find_taxi", "search for a taxi"),
    ("find_bus", "search for a bus"),
    ("find_police", "search for a police station"),
]

_MULTIWOZ_MODIFIED_STEPS = [
    ("find_hotel", "search for a hotel"),
    ("book_hotel", "book a hotel"),
    ("find_train", "search for train"),
    ("book_train", "book train tickets"),
    ("find_attraction", "search for attractions"),
    ("find_restaurant", "search for a restaurant"),
    ("book_restaurant", "book a table at a restaurant"),
    ("find_hospital", "search for hospital or a doctor"),
    ("book_taxi", "book a taxi"),
    ("find_taxi", "search for a taxi"),
    ("find_bus", "search for a bus"),
    ("find_police", "search for a police station"),
]

_BUILTIN = {
    "abcd": _ABCD_STEPS,
    "multiwoz_original": _MULTIWOZ_ORIGINAL_STEPS,
    "multiwoz_modified": _MULTIWOZ_MODIFIED_STEPS,
}


def builtin_domain_tags() -> list[str]:
    return sorted(_BUILTIN)


def builtin_domain(tag: str) -> StepDomain:
    """Return the builtin domain registered under ``tag``."""
    try:
        rows = _BUILTIN[tag]
    except KeyError:
        known = ", ".join(builtin_domain_tags())
        raise UnknownDomainTag(f"unknown domain tag {tag!r} (builtin: {known})")
    return StepDomain(entries=tuple(rows), dataset_tag=tag)
