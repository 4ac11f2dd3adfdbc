import json

from shop.cart import Cart
from shop.pricing import tax


def checkout(lines, rate):
    cart = Cart()
    for sku, price in lines:
        cart.add(sku, price)
    net = cart.apply(rate)
    return format_receipt(net, tax(net))


def format_receipt(net, vat):
    return json.dumps({"net": str(net), "vat": str(vat)}, sort_keys=True)
