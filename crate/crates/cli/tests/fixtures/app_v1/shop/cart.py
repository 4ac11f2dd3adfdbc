from shop.models import Item
from shop.pricing import discount, to_money


class Cart:
    def __init__(self):
        self.items = []

    def add(self, sku, price, qty=1):
        self.items.append((Item(sku, price), qty))

    def subtotal(self):
        return to_money(sum(item.total(qty) for item, qty in self.items))

    def apply(self, rate):
        return discount(self.subtotal(), rate)
