import typer

from septrans.channel.check_collection import app as check_collection_app
from septrans.channel.example import app as example_app
from septrans.channel.fixed_states import app as fixed_states_app

app = typer.Typer(no_args_is_help=True)

app.add_typer(fixed_states_app)
app.add_typer(check_collection_app)
app.add_typer(example_app)
