import { runScript } from './figures.js'

process.exit(runScript(3, process.argv.slice(2)))
