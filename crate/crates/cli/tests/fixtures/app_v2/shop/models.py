class Item:
    def __init__(self, sku, price):
        self.sku = sku
        self.price = price

    def total(self, qty):
        return self.price * qty
