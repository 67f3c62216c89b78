from order_ltr.cli import run

run()
