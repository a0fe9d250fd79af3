class Tabbed:
	def tab_method(self):
		pass

	def other_tab(self):
		def nested_tab():
			pass


def	tab_after_def():
	pass


class	TabClass:
	pass
